"""Qubit-resonator Hamiltonians and their unitary / Lindblad evolution."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence, TextIO

import numpy as np

from .device import DeviceParams, derive
from .errors import DimensionError, DispersiveRegimeError, InvalidStateError, NumericalError
from .quantum import (
    HilbertSpace,
    Operator,
    State,
    destroy,
    embed,
    sigma_minus,
    sigma_plus,
    sigma_x,
    sigma_z,
    zero_operator,
)

KINDS = ("jaynes_cummings", "driven_single_qubit", "dispersive_x", "dispersive_z",
         "dispersive_two_qubit")

DISPERSIVE_RATIO = 4.0
DISPERSIVE_COMFORT = 10.0


@dataclass(frozen=True)
class HamiltonianSpec:
    """Parameters of one of the model Hamiltonians (all rates in rad/ns).

    ``delta`` is the qubit-resonator detuning.  When left as ``None`` it is the
    signed ``omega - omega0``, so the Stark shift ``g**2 / delta`` carries the
    sign the exact Jaynes-Cummings model produces.  ``frame`` records which
    rotating frame the built operator lives in; ``omega_ref`` is its reference
    frequency when that is not implied by ``kind``.
    """

    kind: str
    g: float = 0.0
    omega: float = 0.0
    omega0: float = 0.0
    omega_dr: float = 0.0
    Omega: float = 0.0
    delta: float | None = None
    frame: str = "lab"
    omega_ref: float | None = None
    n_max: int = 5
    dispersive_ratio: float = DISPERSIVE_RATIO
    force: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown Hamiltonian kind {self.kind!r}")
        for name in ("g", "omega", "omega0", "omega_dr", "Omega"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")

    @property
    def detuning(self) -> float:
        return self.omega - self.omega0 if self.delta is None else self.delta

    @property
    def stark_shift(self) -> float:
        d = self.detuning
        return 0.0 if self.g == 0 else self.g ** 2 / d

    @property
    def rabi(self) -> float:
        return rabi_frequency(self.Omega, self.g, self.omega0, self.omega_dr)

    @property
    def z_rate(self) -> float:
        return z_rotation_rate(self)

    def with_(self, **changes) -> "HamiltonianSpec":
        return replace(self, **changes)


@dataclass(frozen=True)
class LindbladChannel:
    operator: Operator
    rate: float
    name: str = ""

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("Lindblad rates must be non-negative")


@dataclass(frozen=True)
class SimResult:
    times: np.ndarray
    states: tuple[State, ...]
    top_fock_population: float | None = None
    min_eigenvalue: float | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def final(self) -> State:
        return self.states[-1]

    def expect(self, op: Operator) -> np.ndarray:
        return np.array([s.expect(op) for s in self.states])


# --------------------------------------------------------------------------
# rates


def rabi_frequency(Omega: float, g: float, omega0: float, omega_dr: float) -> float:
    """Effective qubit Rabi frequency 2 Omega g / (omega0 - omega_dr) of the resonator drive."""
    if omega0 == omega_dr:
        raise ZeroDivisionError("drive resonant with the resonator: Rabi frequency undefined")
    return 2.0 * Omega * g / (omega0 - omega_dr)


def z_rotation_rate(spec: HamiltonianSpec) -> float:
    """Light-shifted qubit precession rate in the drive frame."""
    detuned = spec.omega - spec.omega_dr
    if detuned == 0:
        raise ZeroDivisionError("drive resonant with the qubit: no z rotation rate")
    om_r = spec.rabi
    return spec.omega + spec.stark_shift - spec.omega_dr + 0.5 * om_r ** 2 / detuned


def _check_dispersive(spec_g: float, delta: float, ratio: float, force: bool):
    if spec_g == 0:
        return
    r = abs(delta) / abs(spec_g)
    if r < ratio:
        msg = f"|delta|/g = {r:.3g} is below the dispersive threshold {ratio:g}"
        if not force:
            raise DispersiveRegimeError(msg)
        warnings.warn(msg + " (forced)", RuntimeWarning, stacklevel=3)
    elif r < DISPERSIVE_COMFORT:
        warnings.warn(f"|delta|/g = {r:.3g} < {DISPERSIVE_COMFORT:g}: dispersive corrections "
                      "of order (g/delta)^2 are not small", RuntimeWarning, stacklevel=3)


# --------------------------------------------------------------------------
# builders


def qubit_resonator_space(n_qubits: int, n_max: int) -> HilbertSpace:
    return HilbertSpace((2,) * n_qubits + (n_max + 1,))


def _ops(sp: HilbertSpace):
    res = sp.n_subsystems - 1
    a = embed(destroy(sp.dims[res]), res, sp)
    return a, res


def build_jc(g: float, n_max: int, n_qubits: int = 1, couplings: Iterable[int] | None = None,
             resonator_detuning: float = 0.0) -> Operator:
    """Resonator exchange Hamiltonian ``g sum_i (a sigma_+^i + a^dag sigma_-^i)``.

    Lives in the frame rotating at the qubit frequency; ``resonator_detuning``
    (omega0 - omega) adds the residual ``(omega0 - omega) a^dag a``.  Only the
    qubits listed in ``couplings`` interact (all of them by default).
    """
    if g < 0:
        raise ValueError("g must be non-negative")
    sp = qubit_resonator_space(n_qubits, n_max)
    a, _ = _ops(sp)
    coupled = range(n_qubits) if couplings is None else sorted(couplings)
    h = zero_operator(sp)
    for i in coupled:
        if not 0 <= i < n_qubits:
            raise DimensionError(f"qubit index {i} out of range")
        sp_i = embed(sigma_plus(), i, sp)
        h = h + g * (a @ sp_i + a.dag() @ sp_i.dag())
    if resonator_detuning:
        h = h + resonator_detuning * (a.dag() @ a)
    return h


def build_driven_single_qubit(spec: HamiltonianSpec) -> Operator:
    """Driven qubit-resonator Hamiltonian in the frame rotating at the drive frequency."""
    if spec.kind != "driven_single_qubit":
        raise ValueError("spec.kind must be 'driven_single_qubit'")
    sp = qubit_resonator_space(1, spec.n_max)
    a, _ = _ops(sp)
    sz, sx, sm = embed(sigma_z(), 0, sp), embed(sigma_x(), 0, sp), embed(sigma_minus(), 0, sp)
    om_r = spec.rabi
    return ((spec.omega0 - spec.omega_dr) * (a.dag() @ a)
            + 0.5 * (spec.omega - spec.omega_dr) * sz
            - spec.g * (a.dag() @ sm + a @ sm.dag())
            + 0.5 * om_r * sx)


def build_dispersive_x(spec: HamiltonianSpec) -> Operator:
    """Dispersive single-qubit Hamiltonian; a pure x rotation when omega_dr = omega + g^2/delta."""
    _check_dispersive(spec.g, spec.detuning, spec.dispersive_ratio, spec.force)
    sp = qubit_resonator_space(1, spec.n_max)
    a, _ = _ops(sp)
    sz, sx = embed(sigma_z(), 0, sp), embed(sigma_x(), 0, sp)
    return ((spec.omega0 - spec.omega_dr) * (a.dag() @ a)
            + 0.5 * (spec.omega + spec.stark_shift - spec.omega_dr) * sz
            + 0.5 * spec.rabi * sx)


def build_dispersive_z(spec: HamiltonianSpec) -> Operator:
    _check_dispersive(spec.g, spec.detuning, spec.dispersive_ratio, spec.force)
    om_r = spec.rabi
    detuned = spec.omega - spec.omega_dr
    if abs(detuned) < spec.dispersive_ratio * abs(om_r):
        msg = (f"|omega - omega_dr| = {abs(detuned):.4g} is not >= {spec.dispersive_ratio:g} "
               f"x Omega_R = {abs(om_r):.4g}")
        if not spec.force:
            raise DispersiveRegimeError(msg)
        warnings.warn(msg + " (forced)", RuntimeWarning, stacklevel=2)
    sp = qubit_resonator_space(1, spec.n_max)
    a, _ = _ops(sp)
    sz = embed(sigma_z(), 0, sp)
    return (spec.omega0 - spec.omega_dr) * (a.dag() @ a) + 0.5 * z_rotation_rate(spec) * sz


def build_dispersive_two_qubit(g: float, delta: float, omega: float, omega0: float, n_max: int,
                               frame: str = "lab", force: bool = False,
                               ratio: float = DISPERSIVE_RATIO) -> Operator:
    """Two identical qubits dispersively coupled through the resonator.

    ``frame='rotating'`` removes ``omega0 a^dag a + (omega/2) sum sigma_z``, which
    leaves ``lam sum sigma_z a^dag a + (lam/2) sum sigma_z + lam (flip-flop)``
    with ``lam = g^2/delta``.
    """
    _check_dispersive(g, delta, ratio, force)
    sp = qubit_resonator_space(2, n_max)
    a, _ = _ops(sp)
    n = a.dag() @ a
    szs = embed(sigma_z(), 0, sp) + embed(sigma_z(), 1, sp)
    sp1, sp2 = embed(sigma_plus(), 0, sp), embed(sigma_plus(), 1, sp)
    flip_flop = sp1 @ sp2.dag() + sp1.dag() @ sp2
    lam = g ** 2 / delta if g else 0.0
    if frame == "lab":
        return omega0 * n + lam * (szs @ n) + 0.5 * (omega + lam) * szs + lam * flip_flop
    if frame == "rotating":
        return lam * (szs @ n) + 0.5 * lam * szs + lam * flip_flop
    raise ValueError(f"unknown frame {frame!r}")


def build(spec: HamiltonianSpec, n_qubits: int = 1, couplings: Iterable[int] | None = None) -> Operator:
    """Dispatch on ``spec.kind``."""
    if spec.kind == "jaynes_cummings":
        return build_jc(spec.g, spec.n_max, n_qubits=n_qubits, couplings=couplings,
                        resonator_detuning=spec.omega0 - spec.omega)
    if spec.kind == "driven_single_qubit":
        return build_driven_single_qubit(spec)
    if spec.kind == "dispersive_x":
        return build_dispersive_x(spec)
    if spec.kind == "dispersive_z":
        return build_dispersive_z(spec)
    delta = spec.detuning
    return build_dispersive_two_qubit(spec.g, delta, spec.omega, spec.omega0, spec.n_max,
                                      frame=spec.frame, force=spec.force,
                                      ratio=spec.dispersive_ratio)


def total_excitation(sp: HilbertSpace) -> Operator:
    """``a^dag a + sum_i sigma_z^i / 2`` on a qubits-then-resonator space."""
    a, res = _ops(sp)
    n = a.dag() @ a
    for i in range(res):
        n = n + 0.5 * embed(sigma_z(), i, sp)
    return n


# --------------------------------------------------------------------------
# evolution


Schedule = Sequence[tuple[Operator, float]]


def _segments(H) -> list[tuple[Operator, float]]:
    if isinstance(H, Operator):
        return [(H, math.inf)]
    segs = [(op, float(dt)) for op, dt in H]
    if not segs:
        raise ValueError("empty Hamiltonian schedule")
    sp = segs[0][0].space
    for op, dt in segs:
        if op.space != sp:
            raise DimensionError("all schedule segments must act on the same space")
        if dt < 0:
            raise ValueError("segment durations must be non-negative")
    return segs


def _check_grid(t_grid, total: float) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if t.ndim != 1 or np.any(t < 0) or np.any(np.diff(t) < 0):
        raise ValueError("t_grid must be a non-decreasing list of non-negative times")
    if t.size and t[-1] > total * (1 + 1e-12) + 1e-12:
        raise ValueError(f"t_grid extends past the schedule end ({total} ns)")
    return t


def _top_population(vec_or_rho: np.ndarray, sp: HilbertSpace, fock: int | None) -> float | None:
    if fock is None:
        return None
    dims = sp.dims
    if vec_or_rho.ndim == 1:
        p = np.abs(vec_or_rho.reshape(dims)) ** 2
    else:
        p = np.real(np.diagonal(vec_or_rho)).reshape(dims)
    return float(np.take(p, dims[fock] - 1, axis=fock).sum())


def _default_fock(sp: HilbertSpace, fock_subsystem) -> int | None:
    if fock_subsystem == "auto":
        return sp.n_subsystems - 1 if sp.n_subsystems > 1 and sp.dims[-1] > 2 else None
    return fock_subsystem


def evolve_unitary(H, psi0: State, t_grid, fock_subsystem: int | None | str = "auto") -> SimResult:
    """Exact piecewise-constant Schrodinger evolution sampled on ``t_grid``.

    ``H`` is an :class:`Operator` (constant) or a sequence of ``(Operator, duration)``
    segments starting at t = 0.
    """
    segs = _segments(H)
    sp = segs[0][0].space
    if psi0.space != sp:
        raise DimensionError(f"initial state space {psi0.space.dims} != Hamiltonian space {sp.dims}")
    if not psi0.is_pure:
        raise InvalidStateError("evolve_unitary needs a pure initial state")
    psi0.validate()
    for op, _ in segs:
        if not op.is_hermitian():
            raise InvalidStateError("segment Hamiltonian is not Hermitian")
    bounds = np.concatenate([[0.0], np.cumsum([dt for _, dt in segs])])
    t = _check_grid(t_grid, bounds[-1])
    fock = _default_fock(sp, fock_subsystem)

    eig_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def step(k: int, vec: np.ndarray, dt: float) -> np.ndarray:
        if dt == 0:
            return vec
        if k not in eig_cache:
            m = segs[k][0].matrix
            eig_cache[k] = np.linalg.eigh((m + m.conj().T) / 2)
        w, v = eig_cache[k]
        return v @ (np.exp(-1j * w * dt) * (v.conj().T @ vec))

    vec = psi0.data.copy()
    cur_t, seg = 0.0, 0
    states, tops = [], []
    for tk in t:
        while cur_t < tk:
            end = tk if seg == len(segs) - 1 else min(bounds[seg + 1], tk)
            vec = step(seg, vec, end - cur_t)
            cur_t = end
            if cur_t >= bounds[seg + 1] and seg + 1 < len(segs):
                seg += 1
        states.append(State(vec.copy(), sp))
        top = _top_population(vec, sp, fock)
        if top is not None:
            tops.append(top)
    return SimResult(t, tuple(states), max(tops) if tops else None,
                     metadata={"n_segments": len(segs)})


def liouvillian(H: Operator, channels: Sequence[LindbladChannel] = ()) -> np.ndarray:
    """Row-major vectorised generator of ``d rho/dt = -i[H, rho] + sum_k D[L_k] rho``."""
    h = H.matrix
    d = h.shape[0]
    eye = np.eye(d)
    gen = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for ch in channels:
        if ch.operator.space != H.space:
            raise DimensionError(f"channel {ch.name or '?'} acts on a different space")
        if ch.rate == 0:
            continue
        lop = ch.operator.matrix
        ld = lop.conj().T @ lop
        gen += ch.rate * (np.kron(lop, lop.conj()) - 0.5 * np.kron(ld, eye) - 0.5 * np.kron(eye, ld.T))
    return gen


def lindblad_max_step(H: Operator, channels: Sequence[LindbladChannel]) -> float:
    rates = [c.rate * np.linalg.norm(c.operator.matrix, 2) ** 2 for c in channels]
    bounds = [1.0 / (50.0 * r) for r in rates if r > 0]
    hn = np.linalg.norm(H.matrix, 2)
    if hn > 0:
        bounds.append(1.0 / (50.0 * hn))
    return min(bounds) if bounds else math.inf


def _rk4_propagator(gen: np.ndarray, h: float) -> np.ndarray:
    # one classical RK4 step of a linear autonomous ODE is this degree-4 Taylor polynomial
    a = h * gen
    eye = np.eye(gen.shape[0], dtype=complex)
    a2 = a @ a
    return eye + a + a2 / 2 + (a2 @ a) / 6 + (a2 @ a2) / 24


def evolve_lindblad(H, channels: Sequence[LindbladChannel], rho0: State, t_grid,
                    max_step: float | None = None, fock_subsystem: int | None | str = "auto",
                    trace_tol: float = 1e-8, herm_tol: float = 1e-8, pos_tol: float = 1e-7,
                    ) -> SimResult:
    """Fixed-step RK4 integration of the Lindblad master equation.

    The step never exceeds min(1/(50 max rate), 1/(50 ||H||)) unless
    ``max_step`` overrides it.  Trace,
    Hermiticity and positivity are checked at every output time; a violation
    beyond tolerance raises :class:`NumericalError` with the offending values.
    """
    segs = _segments(H)
    sp = segs[0][0].space
    if rho0.space != sp:
        raise DimensionError(f"initial state space {rho0.space.dims} != Hamiltonian space {sp.dims}")
    rho_init = rho0.dm().validate(pos_tol=1e-9)
    bounds = np.concatenate([[0.0], np.cumsum([dt for _, dt in segs])])
    t = _check_grid(t_grid, bounds[-1])
    fock = _default_fock(sp, fock_subsystem)
    d = sp.size

    gens: dict[int, tuple[np.ndarray, float]] = {}

    def generator(k: int):
        if k not in gens:
            op = segs[k][0]
            hmax = lindblad_max_step(op, channels) if max_step is None else max_step
            gens[k] = (liouvillian(op, channels), hmax)
        return gens[k]

    prop_cache: dict[tuple[int, int], np.ndarray] = {}

    def advance(k: int, vec: np.ndarray, dt: float) -> np.ndarray:
        if dt <= 0:
            return vec
        gen, hmax = generator(k)
        n = max(1, math.ceil(dt / hmax - 1e-9)) if math.isfinite(hmax) else 1
        h = dt / n
        key = (k, round(h * 1e12))
        if key not in prop_cache:
            if len(prop_cache) > 64:
                prop_cache.clear()
            prop_cache[key] = _rk4_propagator(gen, h)
        p = prop_cache[key]
        for _ in range(n):
            vec = p @ vec
        return vec

    vec = rho_init.data.reshape(-1).copy()
    cur_t, seg = 0.0, 0
    states, tops, mins = [], [], []
    for tk in t:
        while cur_t < tk:
            end = tk if seg == len(segs) - 1 else min(bounds[seg + 1], tk)
            vec = advance(seg, vec, end - cur_t)
            cur_t = end
            if cur_t >= bounds[seg + 1] and seg + 1 < len(segs):
                seg += 1
        rho = vec.reshape(d, d)
        if not np.all(np.isfinite(rho)):
            raise NumericalError(f"non-finite density matrix at t = {tk} ns")
        tr_err = abs(np.trace(rho) - 1.0)
        h_err = float(np.max(np.abs(rho - rho.conj().T)))
        lo = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2).min())
        if tr_err > trace_tol or h_err > herm_tol or lo < -pos_tol:
            raise NumericalError(
                f"Lindblad step failure at t = {tk} ns: |Tr rho - 1| = {tr_err:.2e}, "
                f"||rho - rho^dag|| = {h_err:.2e}, min eig = {lo:.2e}")
        states.append(State(rho.copy(), sp))
        mins.append(lo)
        top = _top_population(rho, sp, fock)
        if top is not None:
            tops.append(top)
    return SimResult(t, tuple(states), max(tops) if tops else None,
                     min(mins) if mins else None, metadata={"n_segments": len(segs)})



def lindblad_superoperator(H, channels: Sequence[LindbladChannel], max_step: float | None = None
                           ) -> np.ndarray:
    """Row-major superoperator of a whole schedule under the same RK4 stepping as
    :func:`evolve_lindblad` (repeated steps are combined by binary powering)."""
    segs = _segments(H)
    d = segs[0][0].space.size
    total = np.eye(d * d, dtype=complex)
    for op, dt in segs:
        if not math.isfinite(dt):
            raise ValueError("lindblad_superoperator needs finite segment durations")
        if dt == 0:
            continue
        hmax = lindblad_max_step(op, channels) if max_step is None else max_step
        n = max(1, math.ceil(dt / hmax - 1e-9)) if math.isfinite(hmax) else 1
        p = np.linalg.matrix_power(_rk4_propagator(liouvillian(op, channels), dt / n), n)
        total = p @ total
    return total

# --------------------------------------------------------------------------
# decoherence rates


@dataclass(frozen=True)
class DephasingRates:
    T2_from_Tb: float
    gamma_phi_readout: float
    T2star_from_field: float


def dephasing_rates(params: DeviceParams, g: float | None = None,
                    delta: float | None = None) -> DephasingRates:
    """Charge dephasing time, measurement-induced dephasing rate and hyperfine T2*.

    * ``T2 = omega * T_b**2`` (second-order charge noise at the optimal point),
    * ``gamma_phi = 8 n_bar (g^2/delta)^2 / kappa``,
    * ``T2* = 1 / (|g_factor| mu_B <dB_n>_rms)``.
    """
    from .device import MU_B_OVER_HBAR

    dq = derive(params)
    g = dq.g if g is None else g
    delta = abs(dq.omega - dq.omega0) if delta is None else abs(delta)
    chi = g ** 2 / delta if g else 0.0
    gamma = 8.0 * params.n_bar * chi ** 2 / dq.kappa
    field_rate = abs(params.g_factor) * MU_B_OVER_HBAR * params.B_nuc_rms * 1e-3
    return DephasingRates(
        T2_from_Tb=dq.omega * params.T_b ** 2,
        gamma_phi_readout=gamma,
        T2star_from_field=math.inf if field_rate == 0 else 1.0 / field_rate,
    )


def write_trajectory_csv(result: SimResult, observables: dict[str, Operator], out: TextIO,
                         header: Iterable[str] = ()) -> None:
    """Rows of ``t_ns, observable_name, value_re, value_im``; ``header`` lines are written as ``#`` comments."""
    for line in header:
        out.write(f"# {line}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["t_ns", "observable_name", "value_re", "value_im"])
    for t, st in zip(result.times, result.states):
        for name, op in observables.items():
            v = st.expect(op)
            w.writerow([repr(float(t)), name, repr(float(v.real)), repr(float(v.imag))])
