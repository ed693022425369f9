"""Dispersive readout: state-dependent resonator pull, transmission line shape, measurement time."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .errors import DispersiveRegimeError

PAPER_MEASUREMENT_TIME_NS = 0.02


@dataclass(frozen=True)
class ReadoutParams:
    """Rates in rad/ns; ``delta`` is the qubit-resonator detuning |omega - omega0|."""

    g: float
    delta: float
    omega0: float
    kappa: float
    n_bar: float = 1.0


@dataclass(frozen=True)
class Pull:
    chi: float
    peak_0: float
    peak_1: float

    @property
    def separation(self) -> float:
        return self.peak_1 - self.peak_0


def dispersive_pull(p: ReadoutParams) -> Pull:
    """chi = g^2/|delta|; qubit |0> pulls the resonator to omega0 - chi, |1> to omega0 + chi."""
    if p.delta == 0:
        raise DispersiveRegimeError("delta = 0: resonant, no dispersive pull")
    chi = p.g ** 2 / abs(p.delta)
    n_crit = p.delta ** 2 / (4 * p.g ** 2) if p.g else math.inf
    if p.n_bar > n_crit:
        warnings.warn(f"n_bar = {p.n_bar:g} exceeds n_crit = {n_crit:.3g}; the pull is power "
                      "dependent there and the linear model overestimates it", RuntimeWarning,
                      stacklevel=2)
    return Pull(chi, p.omega0 - chi, p.omega0 + chi)


@dataclass(frozen=True)
class SpectrumRequest:
    qubit_state: int
    f_min: float
    f_max: float
    n_points: int
    params: ReadoutParams

    def __post_init__(self):
        if self.qubit_state not in (0, 1):
            raise ValueError("qubit_state must be 0 or 1")
        if not self.f_min < self.f_max:
            raise ValueError("need f_min < f_max")
        if self.n_points < 3:
            raise ValueError("need at least 3 points")


@dataclass(frozen=True)
class Spectrum:
    frequencies: np.ndarray
    transmission: np.ndarray
    peak_frequency: float
    fwhm: float


def lorentzian(w: np.ndarray, center: float, kappa: float) -> np.ndarray:
    hw2 = (kappa / 2) ** 2
    return hw2 / ((np.asarray(w) - center) ** 2 + hw2)


def _half_max_width(w: np.ndarray, y: np.ndarray) -> float:
    # linear interpolation of the two half-maximum crossings around the peak
    k = int(np.argmax(y))
    half = y[k] / 2
    left = np.nonzero(y[:k] < half)[0]
    right = np.nonzero(y[k:] < half)[0]
    if not len(left) or not len(right):
        return math.nan
    i, j = left[-1], k + right[0]
    wl = np.interp(half, [y[i], y[i + 1]], [w[i], w[i + 1]])
    wr = np.interp(half, [y[j], y[j - 1]], [w[j], w[j - 1]])
    return float(wr - wl)


def transmission_spectrum(req: SpectrumRequest) -> Spectrum:
    pull = dispersive_pull(req.params)
    center = pull.peak_0 if req.qubit_state == 0 else pull.peak_1
    w = np.linspace(req.f_min, req.f_max, req.n_points)
    y = lorentzian(w, center, req.params.kappa)
    return Spectrum(w, y, center, _half_max_width(w, y))


def fit_lorentzian(w: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares (center, FWHM) of a unit-height Lorentzian."""
    from scipy.optimize import curve_fit

    k = int(np.argmax(y))
    guess = (w[k], max(_half_max_width(w, y), (w[1] - w[0]) * 2))
    (c, width), _ = curve_fit(lambda x, c, k_: lorentzian(x, c, k_), w, y, p0=guess)
    return float(c), float(abs(width))


@dataclass(frozen=True)
class MeasurementTime:
    t_m: float
    gamma_phi: float
    paper_value: float = PAPER_MEASUREMENT_TIME_NS

    @property
    def discrepancy(self) -> float:
        return self.t_m / self.paper_value


def measurement_time(p: ReadoutParams) -> MeasurementTime:
    """t_m = 1/gamma_phi with gamma_phi = 8 n_bar chi^2 / kappa."""
    if not p.kappa > 0 or not p.n_bar > 0:
        raise ValueError("need kappa > 0 and n_bar > 0")
    chi = p.g ** 2 / abs(p.delta)
    gamma = 8 * p.n_bar * chi ** 2 / p.kappa
    return MeasurementTime(1.0 / gamma if gamma else math.inf, gamma)


def discrimination_separation(p: ReadoutParams) -> tuple[float, bool]:
    """Peak separation over linewidth 2 chi / kappa, and whether it is >= 1."""
    if not p.kappa > 0:
        raise ValueError("need kappa > 0")
    ratio = 2 * p.g ** 2 / abs(p.delta) / p.kappa
    return ratio, ratio >= 1


def write_spectrum_csv(spec: Spectrum, out: TextIO, header: list[str] = ()) -> None:
    for line in header:
        out.write(f"# {line}\n")
    two_pi = 2 * math.pi
    out.write(f"# peak_GHz = {spec.peak_frequency / two_pi!r}\n")
    out.write(f"# fwhm_GHz = {spec.fwhm / two_pi!r}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["omega_dr_GHz_linear", "transmission"])
    for f, t in zip(spec.frequencies, spec.transmission):
        w.writerow([repr(float(f / two_pi)), repr(float(t))])
