"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operator, state or subsystem dimensions do not agree."""


class NotHermitianError(ValueError):
    pass


class NotUnitaryError(ValueError):
    pass


class InvalidStateError(ValueError):
    pass


class DispersiveRegimeError(ValueError):
    """Raised when an effective dispersive model is requested outside |delta| >= 4 g."""


class NumericalError(RuntimeError):
    """An integrator lost trace, Hermiticity or produced non-finite values."""


class ConfigError(ValueError):
    pass
