"""Dense operators and states on small tensor-product Hilbert spaces.

Conventions used everywhere in the package:

* hbar = 1, energies are angular frequencies in rad/ns and times are in ns.
* Subsystem 0 is the most significant factor of the Kronecker product.
  Qubits come first, the truncated resonator (if any) is the last subsystem.
* Qubit basis index 0 is the logical ``|0>`` and index 1 is ``|1>``, the
  higher-energy state, so ``sigma_z |1> = +|1>`` and ``sigma_plus = |1><0|``.
* Density matrices are vectorised row-major, so ``vec(A rho B) = kron(A, B.T) vec(rho)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, InvalidStateError, NotHermitianError, NotUnitaryError

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-8


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HilbertSpace:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise DimensionError(f"invalid subsystem dimensions {self.dims!r}")
        object.__setattr__(self, "dims", dims)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    def __add__(self, other: "HilbertSpace") -> "HilbertSpace":
        return HilbertSpace(self.dims + other.dims)


def space(*dims: int) -> HilbertSpace:
    if len(dims) == 1 and isinstance(dims[0], (tuple, list)):
        dims = tuple(dims[0])
    return HilbertSpace(tuple(dims))


@dataclass(frozen=True, eq=False)
class Operator:
    """An immutable dense operator tied to the space it acts on."""

    matrix: np.ndarray
    space: HilbertSpace

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"operator matrix must be square, got shape {m.shape}")
        if m.shape[0] != self.space.size:
            raise DimensionError(
                f"matrix dimension {m.shape[0]} does not match space {self.space.dims}")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_matrix(cls, matrix, dims: Sequence[int] | None = None) -> "Operator":
        m = np.asarray(matrix, dtype=complex)
        return cls(m, HilbertSpace(tuple(dims) if dims is not None else (m.shape[0],)))

    @property
    def dim(self) -> int:
        return self.space.size

    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.space)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.matrix), initial=0.0)))
        return self.hermiticity_error() <= tol * scale

    def unitarity_error(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))

    def is_unitary(self, tol: float = UNITARY_TOL) -> bool:
        return self.unitarity_error() <= tol

    def _check(self, other: "Operator"):
        if self.space != other.space:
            raise DimensionError(f"space mismatch {self.space.dims} vs {other.space.dims}")

    def __add__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.matrix + other.matrix, self.space)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.matrix - other.matrix, self.space)

    def __neg__(self) -> "Operator":
        return Operator(-self.matrix, self.space)

    def __mul__(self, scalar) -> "Operator":
        if isinstance(scalar, Operator):
            return NotImplemented
        return Operator(self.matrix * scalar, self.space)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "Operator":
        return Operator(self.matrix / scalar, self.space)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.matrix @ other.matrix, self.space)
        if isinstance(other, State):
            if self.space != other.space:
                raise DimensionError("operator and state live on different spaces")
            if other.is_pure:
                return State(self.matrix @ other.data, other.space)
            return State(self.matrix @ other.data @ self.matrix.conj().T, other.space)
        return NotImplemented

    def __repr__(self) -> str:
        return f"Operator(dims={self.space.dims})"


@dataclass(frozen=True, eq=False)
class State:
    """A pure state (1-d vector) or mixed state (density matrix)."""

    data: np.ndarray
    space: HilbertSpace

    def __post_init__(self):
        d = _frozen(self.data)
        n = self.space.size
        if d.ndim == 1:
            ok = d.shape[0] == n
        elif d.ndim == 2:
            ok = d.shape == (n, n)
        else:
            ok = False
        if not ok:
            raise DimensionError(f"state data of shape {d.shape} does not fit space {self.space.dims}")
        object.__setattr__(self, "data", d)

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @property
    def kind(self) -> str:
        return "pure" if self.is_pure else "mixed"

    def dm(self) -> "State":
        if self.is_pure:
            return State(np.outer(self.data, self.data.conj()), self.space)
        return self

    def density_matrix(self) -> np.ndarray:
        return self.dm().data

    def expect(self, op: Operator) -> complex:
        if op.space != self.space:
            raise DimensionError("operator and state live on different spaces")
        if self.is_pure:
            return complex(self.data.conj() @ op.matrix @ self.data)
        return complex(np.trace(op.matrix @ self.data))

    def validate(self, norm_tol: float = 1e-10, trace_tol: float = 1e-10,
                 herm_tol: float = 1e-10, pos_tol: float = 1e-9) -> "State":
        if self.is_pure:
            norm = np.linalg.norm(self.data)
            if abs(norm - 1.0) >= norm_tol:
                raise InvalidStateError(f"pure state norm {norm!r} is not 1")
            return self
        rho = self.data
        tr = np.trace(rho)
        if abs(tr - 1.0) >= trace_tol:
            raise InvalidStateError(f"density matrix trace {tr!r} is not 1")
        if np.max(np.abs(rho - rho.conj().T)) >= herm_tol:
            raise InvalidStateError("density matrix is not Hermitian")
        lo = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()
        if lo < -pos_tol:
            raise InvalidStateError(f"density matrix has negative eigenvalue {lo:.3e}")
        return self


# --------------------------------------------------------------------------
# elementary operators


def identity(n: int) -> Operator:
    return Operator(np.eye(n), HilbertSpace((n,)))


def sigma_plus() -> Operator:
    return Operator(np.array([[0, 0], [1, 0]]), HilbertSpace((2,)))


def sigma_minus() -> Operator:
    return Operator(np.array([[0, 1], [0, 0]]), HilbertSpace((2,)))


def sigma_z() -> Operator:
    return Operator(np.diag([-1.0, 1.0]), HilbertSpace((2,)))


def sigma_x() -> Operator:
    return Operator(np.array([[0, 1], [1, 0]]), HilbertSpace((2,)))


def sigma_y() -> Operator:
    return Operator(np.array([[0, 1j], [-1j, 0]]), HilbertSpace((2,)))


def destroy(n_levels: int) -> Operator:
    """Resonator annihilation operator truncated to ``n_levels`` Fock states."""
    return Operator(np.diag(np.sqrt(np.arange(1, n_levels)), 1), HilbertSpace((n_levels,)))


def number(n_levels: int) -> Operator:
    return Operator(np.diag(np.arange(n_levels, dtype=float)), HilbertSpace((n_levels,)))


def zero_operator(sp: HilbertSpace) -> Operator:
    return Operator(np.zeros((sp.size, sp.size)), sp)


def ket(dims: Sequence[int], *indices: int) -> State:
    """Computational product state ``|i0, i1, ...>``."""
    sp = HilbertSpace(tuple(dims))
    if len(indices) != sp.n_subsystems:
        raise DimensionError("need one index per subsystem")
    flat = int(np.ravel_multi_index(indices, sp.dims))
    v = np.zeros(sp.size, dtype=complex)
    v[flat] = 1.0
    return State(v, sp)


def pure(vector, dims: Sequence[int] | None = None) -> State:
    v = np.asarray(vector, dtype=complex).ravel()
    return State(v, HilbertSpace(tuple(dims) if dims is not None else (v.shape[0],)))


def product_state(*states: State) -> State:
    """Tensor product of pure states."""
    if any(not s.is_pure for s in states):
        raise InvalidStateError("product_state expects pure states")
    vec = reduce(np.kron, [s.data for s in states])
    sp = reduce(lambda a, b: a + b, [s.space for s in states])
    return State(vec, sp)


# --------------------------------------------------------------------------
# structural operations


def tensor(*ops: Operator) -> Operator:
    """Kronecker product; the resulting space concatenates the input spaces."""
    if len(ops) == 1 and isinstance(ops[0], (list, tuple)):
        ops = tuple(ops[0])
    if not ops:
        raise DimensionError("tensor needs at least one operator")
    mat = reduce(np.kron, [o.matrix for o in ops])
    sp = reduce(lambda a, b: a + b, [o.space for o in ops])
    return Operator(mat, sp)


def embed(op: Operator, target: int, sp: HilbertSpace | Sequence[int]) -> Operator:
    """Lift a single-subsystem operator into ``sp``, identity elsewhere."""
    if not isinstance(sp, HilbertSpace):
        sp = HilbertSpace(tuple(sp))
    if not 0 <= target < sp.n_subsystems:
        raise DimensionError(f"subsystem index {target} out of range for {sp.dims}")
    if op.dim != sp.dims[target]:
        raise DimensionError(
            f"operator of dimension {op.dim} cannot act on subsystem {target} of size {sp.dims[target]}")
    factors = [identity(d) for d in sp.dims]
    factors[target] = Operator(op.matrix, HilbertSpace((op.dim,)))
    return tensor(*factors)


def matrix_exponential(H: Operator, t: float) -> Operator:
    """``exp(-i H t)`` for Hermitian ``H`` via eigendecomposition."""
    if not H.is_hermitian():
        raise NotHermitianError(f"Hamiltonian is not Hermitian (error {H.hermiticity_error():.3e})")
    return Operator(_expm_hermitian(H.matrix, t), H.space)


def _expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    hs = (h + h.conj().T) / 2
    w, v = np.linalg.eigh(hs)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def partial_trace(rho: State, keep: Iterable[int]) -> State:
    """Reduced density matrix over the subsystems in ``keep`` (in ascending order)."""
    dims = rho.space.dims
    keep = sorted(set(int(k) for k in keep))
    if not keep or any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionError(f"invalid subsystem indices {keep} for space {dims}")
    r = rho.density_matrix()
    n = len(dims)
    t = r.reshape(dims + dims)
    # einsum subscripts: traced subsystems share the row and column letter
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * n > len(letters):
        raise DimensionError("too many subsystems")
    rows = list(letters[:n])
    cols = list(letters[n:2 * n])
    for i in range(n):
        if i not in keep:
            cols[i] = rows[i]
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    red = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    kd = tuple(dims[i] for i in keep)
    size = int(np.prod(kd))
    return State(red.reshape(size, size), HilbertSpace(kd))


# --------------------------------------------------------------------------
# fidelities


def state_fidelity(a: State, b: State) -> float:
    """Overlap fidelity; at least one argument must be pure."""
    if a.space != b.space:
        raise DimensionError(f"space mismatch {a.space.dims} vs {b.space.dims}")
    if a.is_pure and b.is_pure:
        f = abs(np.vdot(a.data, b.data)) ** 2
    elif a.is_pure:
        f = np.real(a.data.conj() @ b.data @ a.data)
    elif b.is_pure:
        f = np.real(b.data.conj() @ a.data @ b.data)
    else:
        raise InvalidStateError("state_fidelity needs at least one pure state")
    return float(min(1.0, max(0.0, f)))


def _as_matrix(u) -> np.ndarray:
    return u.matrix if isinstance(u, Operator) else np.asarray(u, dtype=complex)


def average_gate_fidelity(U_actual, U_ideal) -> float:
    """``(|Tr(U_ideal^dag U_actual)|^2 + d) / (d^2 + d)`` for unitaries."""
    a, b = _as_matrix(U_actual), _as_matrix(U_ideal)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch {a.shape} vs {b.shape}")
    d = a.shape[0]
    for m in (a, b):
        if np.max(np.abs(m.conj().T @ m - np.eye(d))) > UNITARY_TOL:
            raise NotUnitaryError("average_gate_fidelity needs unitary arguments")
    tr = np.trace(b.conj().T @ a)
    return float((abs(tr) ** 2 + d) / (d * d + d))


def kraus_average_fidelity(kraus: Sequence[np.ndarray], U_ideal) -> float:
    """Average gate fidelity of the (possibly leaky) map ``rho -> sum_k K rho K^dag``.

    Reduces to :func:`average_gate_fidelity` for a single unitary Kraus operator.
    """
    u = _as_matrix(U_ideal)
    d = u.shape[0]
    overlap = sum(abs(np.trace(u.conj().T @ k)) ** 2 for k in kraus)
    weight = sum(np.real(np.trace(k.conj().T @ k)) for k in kraus)
    return float((overlap + weight) / (d * (d + 1)))


def unitary_superop(U) -> np.ndarray:
    u = _as_matrix(U)
    return np.kron(u, u.conj())


def process_fidelity(superop: np.ndarray, U_ideal) -> float:
    u = _as_matrix(U_ideal)
    d = u.shape[0]
    return float(np.real(np.trace(unitary_superop(u).conj().T @ superop)) / d ** 2)


def superop_average_fidelity(superop: np.ndarray, U_ideal) -> float:
    """Average gate fidelity of a trace-preserving channel given as a superoperator."""
    d = _as_matrix(U_ideal).shape[0]
    return (d * process_fidelity(superop, U_ideal) + 1.0) / (d + 1.0)


def apply_superop(superop: np.ndarray, rho: np.ndarray) -> np.ndarray:
    d = rho.shape[0]
    return (superop @ rho.reshape(-1)).reshape(d, d)


_ONE_QUBIT_STABILIZERS = {
    "0": np.array([1, 0]),
    "1": np.array([0, 1]),
    "+": np.array([1, 1]) / np.sqrt(2),
    "-": np.array([1, -1]) / np.sqrt(2),
    "+i": np.array([1, 1j]) / np.sqrt(2),
    "-i": np.array([1, -1j]) / np.sqrt(2),
}


def stabilizer_inputs(n_qubits: int) -> list[tuple[str, np.ndarray]]:
    """Fixed input set used for open-system gate fidelities.

    One qubit: the six Pauli eigenstates.  Two qubits: the 16 products of
    ``{|0>, |1>, |+>, |+i>}``.
    """
    if n_qubits == 1:
        return [(k, v.astype(complex)) for k, v in _ONE_QUBIT_STABILIZERS.items()]
    if n_qubits == 2:
        four = [(k, _ONE_QUBIT_STABILIZERS[k]) for k in ("0", "1", "+", "+i")]
        return [(f"{a}{b}", np.kron(va, vb).astype(complex)) for a, va in four for b, vb in four]
    raise ValueError("stabilizer input sets are defined for one or two qubits")


def mean_state_fidelity(superop: np.ndarray, U_ideal, n_qubits: int) -> float:
    u = _as_matrix(U_ideal)
    fids = []
    for _, psi in stabilizer_inputs(n_qubits):
        out = apply_superop(superop, np.outer(psi, psi.conj()))
        target = u @ psi
        fids.append(np.real(target.conj() @ out @ target))
    return float(np.mean(fids))


def equal_up_to_phase(a, b, atol: float = 1e-9) -> bool:
    a, b = _as_matrix(a), _as_matrix(b)
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[idx]) < atol:
        return bool(np.allclose(a, b, atol=atol))
    phase = a[idx] / b[idx]
    if abs(abs(phase) - 1) > atol:
        return False
    return bool(np.max(np.abs(a - phase * b)) < atol)
