"""Pulse schedules for the universal gate set, state transfer and initialization.

Every schedule runs on ``n_qubits`` DDM qubits followed by one truncated
resonator mode.  Segment Hamiltonians and the ideal targets live in the frame
named by ``PulseSchedule.frame``:

* ``rx`` / ``rz``: frame rotating at the drive frequency (resonator drive
  absorbed into the effective qubit Rabi term).
* ``sqrt_iswap``: qubits rotating at ``omega``, resonator at ``omega0``.
* ``swap_photon`` / ``transport``: resonant interaction picture.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .device import build_reduced_hamiltonian, ghz, qubit_basis
from .dynamics import (
    HamiltonianSpec,
    LindbladChannel,
    SimResult,
    build_dispersive_two_qubit,
    build_dispersive_x,
    build_dispersive_z,
    build_driven_single_qubit,
    build_jc,
    evolve_unitary,
    lindblad_superoperator,
    qubit_resonator_space,
    rabi_frequency,
    z_rotation_rate,
)
from .quantum import (
    HilbertSpace,
    Operator,
    State,
    apply_superop,
    destroy,
    embed,
    identity,
    kraus_average_fidelity,
    matrix_exponential,
    pure,
    sigma_minus,
    sigma_plus,
    sigma_x,
    sigma_z,
    stabilizer_inputs,
    tensor,
    zero_operator,
)


@dataclass(frozen=True)
class GateParams:
    """Operating point of the gate set, rates in rad/ns.

    ``delta`` is the qubit-resonator detuning used by the entangling gate; when
    ``None`` it is ``|omega - omega0|``.
    """

    omega0: float = ghz(10.0)
    omega: float = ghz(5.0)
    omega_dr: float = ghz(5.0)
    g: float = ghz(0.125)
    Omega: float = ghz(10.0)
    delta: float | None = None
    n_max: int = 5
    dispersive_ratio: float = 4.0
    force: bool = False

    @classmethod
    def feasibility(cls) -> "GateParams":
        """The published operating point: {omega0, omega, omega_dr, g, Omega}/2pi =
        {10, 5, 5, 0.125, 10} GHz, with a 1 GHz detuning for the entangling gate."""
        return cls(delta=ghz(1.0))

    @property
    def two_qubit_delta(self) -> float:
        return abs(self.omega - self.omega0) if self.delta is None else abs(self.delta)

    def with_(self, **changes) -> "GateParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class Segment:
    spec: HamiltonianSpec
    duration: float
    couplings: frozenset = frozenset({0})

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("segment durations must be positive")


@dataclass(frozen=True)
class PulseSchedule:
    """A piecewise-constant control program realizing one operation.

    ``kind='gate'``: the logical register is all ``n_qubits`` qubits and
    ``ideal_target`` is a unitary on it.  ``kind='transfer'``: a single logical
    qubit is loaded on ``input_qubit`` and read from ``output`` (a qubit index
    or ``'resonator'``); the ideal action is the identity after applying
    ``output_correction``.
    """

    name: str
    segments: tuple[Segment, ...]
    ideal_target: Operator
    n_qubits: int = 1
    n_max: int = 5
    initial_photons: int = 0
    kind: str = "gate"
    frame: str = ""
    input_qubit: int = 0
    output: object = 0
    output_correction: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    @property
    def logical_qubits(self) -> int:
        return self.n_qubits if self.kind == "gate" else 1

    @property
    def space(self) -> HilbertSpace:
        return qubit_resonator_space(self.n_qubits, self.n_max)


@dataclass
class FidelityReport:
    gate: str
    mode: str
    mean_fidelity: float
    std: float
    n_trajectories: int
    seed: int
    t_gate_ns: float
    metric: str = "average_gate_fidelity"
    average_gate_fidelity: float | None = None
    process_fidelity: float | None = None
    breakdown: dict = field(default_factory=dict)
    var_phi: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not -1e-9 <= self.mean_fidelity <= 1 + 1e-9:
            raise ValueError(f"fidelity {self.mean_fidelity} outside [0, 1]")
        if self.std < 0:
            raise ValueError("negative standard deviation")


CSV_COLUMNS = ("gate", "mode", "n_traj", "seed", "mean_fidelity", "std", "t_gate_ns")


def report_row(r: FidelityReport) -> list:
    return [r.gate, r.mode, r.n_trajectories, r.seed, repr(float(r.mean_fidelity)),
            repr(float(r.std)), repr(float(r.t_gate_ns))]


# --------------------------------------------------------------------------
# ideal unitaries


def rx(angle: float) -> Operator:
    return matrix_exponential(sigma_x(), angle / 2)


def rz(angle: float) -> Operator:
    return matrix_exponential(sigma_z(), angle / 2)


def two_qubit_error_generator() -> Operator:
    """``(3/2) sum_i sigma_z^i + sigma_+^1 sigma_-^2 + sigma_-^1 sigma_+^2`` on two qubits."""
    sz1, sz2 = tensor(sigma_z(), identity(2)), tensor(identity(2), sigma_z())
    sp1, sp2 = tensor(sigma_plus(), identity(2)), tensor(identity(2), sigma_plus())
    return 1.5 * (sz1 + sz2) + sp1 @ sp2.dag() + sp1.dag() @ sp2


def sqrt_iswap_target() -> Operator:
    """Entangling-gate propagator including its local sigma_z phases."""
    return matrix_exponential(two_qubit_error_generator(), math.pi / 4)


def sqrt_iswap_phase_correction() -> Operator:
    """Local z rotations turning :func:`sqrt_iswap_target` into the bare flip-flop gate."""
    szs = tensor(sigma_z(), identity(2)) + tensor(identity(2), sigma_z())
    return matrix_exponential(szs, -3 * math.pi / 8)


# --------------------------------------------------------------------------
# noise sensitivities


def _sensitivity(rate: Callable[[float], float], g: float, delta_ref: float) -> float:
    # d(rate)/d(lambda) with lambda = g^2/delta_ref, both driven by a common coupling fluctuation
    h = 1e-6 * g
    d_rate = rate(g + h) - rate(g - h)
    d_lam = ((g + h) ** 2 - (g - h) ** 2) / delta_ref
    return d_rate / d_lam


# --------------------------------------------------------------------------
# synthesis


def _single_spec(kind: str, params: GateParams, omega_dr: float, Omega: float) -> HamiltonianSpec:
    return HamiltonianSpec(kind, g=params.g, omega=params.omega, omega0=params.omega0,
                           omega_dr=omega_dr, Omega=Omega, n_max=params.n_max,
                           dispersive_ratio=params.dispersive_ratio, force=params.force,
                           frame="rotating", omega_ref=omega_dr)


def synthesize_rx(angle: float, params: GateParams) -> PulseSchedule:
    """x rotation from the resonator drive at ``omega_dr = omega + g^2/delta``."""
    target = rx(angle)
    chi = params.g ** 2 / (params.omega - params.omega0) if params.g else 0.0
    omega_dr = params.omega + chi
    spec = _single_spec("dispersive_x", params, omega_dr, params.Omega)
    build_dispersive_x(spec)  # precondition check
    om_r = spec.rabi
    if om_r == 0:
        raise ValueError("effective Rabi frequency is zero; cannot synthesize an x rotation")
    meta = {"rate": om_r, "paper_time_ns": 1.0 / abs(om_r)}
    if angle == 0:
        return PulseSchedule("rx", (), target, n_max=params.n_max, frame="drive", metadata=meta)
    if math.copysign(1, angle) != math.copysign(1, om_r):
        spec = spec.with_(Omega=-spec.Omega)
        om_r = -om_r
    duration = angle / om_r

    def rate(g):
        return rabi_frequency(spec.Omega, g, spec.omega0, spec.omega_dr)

    meta.update(rate=om_r, noise_gain=_sensitivity(rate, params.g, params.two_qubit_delta),
                error_generator=0.5 * sigma_x())
    return PulseSchedule("rx", (Segment(spec, duration),), target, n_max=params.n_max,
                         frame="drive", metadata=meta)


def synthesize_rz(angle: float, params: GateParams) -> PulseSchedule:
    """z rotation from a drive far detuned from the qubit (|omega - omega_dr| >= 4 Omega_R)."""
    spec = _single_spec("dispersive_z", params, params.omega_dr, params.Omega)
    build_dispersive_z(spec)
    rate0 = z_rotation_rate(spec)
    if rate0 == 0:
        raise ValueError("z rotation rate vanishes; cannot synthesize a z rotation")
    sign = math.copysign(1, rate0)
    target = rz(sign * angle)
    meta = {"rate": rate0, "paper_time_ns": 1.0 / abs(rate0)}
    if angle == 0:
        return PulseSchedule("rz", (), target, n_max=params.n_max, frame="drive", metadata=meta)
    # the light-shift rate has a fixed sign; negative angles go the long way round
    duration = (angle if angle > 0 else angle % (2 * math.pi) or 2 * math.pi) / abs(rate0)

    def rate(g):
        return z_rotation_rate(spec.with_(g=g))

    meta.update(noise_gain=_sensitivity(rate, params.g, params.two_qubit_delta),
                error_generator=0.5 * sigma_z())
    return PulseSchedule("rz", (Segment(spec, duration),), target, n_max=params.n_max,
                         frame="drive", metadata=meta)


def synthesize_sqrt_iswap(params: GateParams) -> PulseSchedule:
    """Dispersive flip-flop gate with one photon in the resonator, t = pi delta / (4 g^2)."""
    delta = params.two_qubit_delta
    if params.g == 0:
        raise ValueError("g = 0: no exchange interaction")
    # qubits sit delta above the resonator so the exchange shift is +g^2/delta
    spec = HamiltonianSpec("dispersive_two_qubit", g=params.g, omega=params.omega0 + delta,
                           omega0=params.omega0, delta=delta, frame="rotating",
                           n_max=params.n_max, dispersive_ratio=params.dispersive_ratio,
                           force=params.force)
    build_dispersive_two_qubit(params.g, delta, spec.omega, spec.omega0, 1,
                               force=params.force, ratio=params.dispersive_ratio)
    lam = params.g ** 2 / delta
    duration = math.pi / (4 * lam)
    meta = {"rate": lam, "paper_time_ns": duration, "noise_gain": 1.0,
            "error_generator": two_qubit_error_generator()}
    return PulseSchedule("sqrt_iswap", (Segment(spec, duration, frozenset({0, 1})),),
                         sqrt_iswap_target(), n_qubits=2, n_max=params.n_max, initial_photons=1,
                         frame="qubits@omega, resonator@omega0", metadata=meta)


def _resonant_spec(params: GateParams) -> HamiltonianSpec:
    return HamiltonianSpec("jaynes_cummings", g=params.g, omega=params.omega0,
                           omega0=params.omega0, n_max=params.n_max, frame="rotating")


SWAP_PHASE = -math.pi / 2  # |1>|0> -> e^{i chi}|0>|1> after g t = pi/2


def synthesize_qubit_photon_swap(params: GateParams, detuning: float = 0.0) -> PulseSchedule:
    """Map a qubit onto the empty resonator in ``pi/(2g)``.

    The photonic |1> picks up ``e^{i chi}`` with ``chi = -pi/2``;
    ``output_correction`` undoes it as a frame rotation.
    """
    if detuning != 0:
        raise ValueError("qubit-photon swap needs a resonant qubit (detuning 0)")
    if params.g <= 0:
        raise ValueError("g must be positive")
    t = math.pi / (2 * params.g)
    corr = np.diag([1.0, np.exp(-1j * SWAP_PHASE)])
    return PulseSchedule("swap_photon", (Segment(_resonant_spec(params), t),), identity(2),
                         n_qubits=1, n_max=params.n_max, kind="transfer", frame="interaction",
                         input_qubit=0, output="resonator", output_correction=corr,
                         metadata={"paper_time_ns": math.pi / params.g, "phase": SWAP_PHASE})


def transport_qubit(source: int, target: int, params: GateParams, n_qubits: int = 2,
                    resonator_photons: int = 0) -> PulseSchedule:
    """Qubit -> photon -> qubit transfer through the resonator with switched couplings."""
    if resonator_photons != 0:
        raise ValueError("transport needs the resonator in the vacuum state")
    if source == target or not (0 <= source < n_qubits and 0 <= target < n_qubits):
        raise ValueError("source and target must be distinct qubit indices")
    t = math.pi / (2 * params.g)
    spec = _resonant_spec(params)
    total_phase = 2 * SWAP_PHASE
    corr = np.diag([1.0, np.exp(-1j * total_phase)])
    segs = (Segment(spec, t, frozenset({source})), Segment(spec, t, frozenset({target})))
    return PulseSchedule("transport", segs, identity(2), n_qubits=n_qubits, n_max=params.n_max,
                         kind="transfer", frame="interaction", input_qubit=source, output=target,
                         output_correction=corr,
                         metadata={"paper_time_ns": 2 * math.pi / params.g, "phase": total_phase})


def compose(*schedules: PulseSchedule) -> PulseSchedule:
    """Run schedules back to back (first argument first)."""
    first = schedules[0]
    for s in schedules[1:]:
        if (s.n_qubits, s.n_max, s.kind, s.initial_photons) != (
                first.n_qubits, first.n_max, first.kind, first.initial_photons):
            raise ValueError("schedules act on different registers")
    target = first.ideal_target
    segs = list(first.segments)
    for s in schedules[1:]:
        target = s.ideal_target @ target
        segs.extend(s.segments)
    return replace(first, name="+".join(s.name for s in schedules), segments=tuple(segs),
                   ideal_target=target, metadata={})


# --------------------------------------------------------------------------
# simulation of schedules


def _segment_hamiltonian(seg: Segment, n_qubits: int, mode: str) -> tuple[Operator, np.ndarray | None]:
    """Hamiltonian of one segment and the diagonal frame phase rates (or None)."""
    spec = seg.spec
    if spec.kind == "jaynes_cummings":
        return build_jc(spec.g, spec.n_max, n_qubits, seg.couplings,
                        resonator_detuning=spec.omega0 - spec.omega), None
    if spec.kind in ("dispersive_x", "dispersive_z"):
        if n_qubits != 1:
            raise ValueError("single-qubit drive segments need a one-qubit register")
        if mode == "exact_full":
            return build_driven_single_qubit(spec.with_(kind="driven_single_qubit")), None
        builder = build_dispersive_x if spec.kind == "dispersive_x" else build_dispersive_z
        return builder(spec), None
    if spec.kind == "dispersive_two_qubit":
        if mode == "exact_full":
            # frame rotating at omega for qubits and resonator; the residual
            # (omega0 - omega) a^dag a rotation is undone afterwards
            detune = spec.omega0 - spec.omega
            h = build_jc(spec.g, spec.n_max, n_qubits, seg.couplings, resonator_detuning=detune)
            n = np.tile(np.arange(spec.n_max + 1, dtype=float), 2 ** n_qubits)
            return h, detune * n
        h = build_dispersive_two_qubit(spec.g, spec.detuning, spec.omega, spec.omega0, spec.n_max,
                                       frame="rotating", force=True)
        return h, None
    raise ValueError(f"cannot simulate segment kind {spec.kind!r}")


def schedule_propagator(schedule: PulseSchedule, mode: str = "effective",
                        extra: Sequence[Operator] = (), samples: int = 8
                        ) -> tuple[np.ndarray, float]:
    """Full-space propagator of the schedule and the largest top-Fock-level
    population seen at ``samples`` points per segment for the logical inputs.

    ``extra`` adds one Hermitian perturbation per segment.
    """
    sp = schedule.space
    u = np.eye(sp.size, dtype=complex)
    top = 0.0
    dims = sp.dims
    starts = _input_columns(schedule)
    for k, seg in enumerate(schedule.segments):
        h, frame = _segment_hamiltonian(seg, schedule.n_qubits, mode)
        m = h.matrix + (extra[k].matrix if extra else 0)
        w, v = np.linalg.eigh((m + m.conj().T) / 2)
        for frac in np.linspace(1.0 / samples, 1.0, samples):
            t = frac * seg.duration
            uk = (v * np.exp(-1j * w * t)) @ v.conj().T
            if frame is not None:
                uk = np.exp(1j * frame * t)[:, None] * uk
            cols = (uk @ u)[:, starts]
            pops = (np.abs(cols) ** 2).reshape(dims + (len(starts),))
            top = max(top, float(np.take(pops, dims[-1] - 1, axis=len(dims) - 1).sum(axis=tuple(range(len(dims) - 1))).max()))
        u = uk @ u
    return u, top


def _input_columns(schedule: PulseSchedule) -> list[int]:
    dims = schedule.space.dims
    cols = []
    if schedule.kind == "gate":
        for q in range(2 ** schedule.n_qubits):
            bits = [(q >> (schedule.n_qubits - 1 - i)) & 1 for i in range(schedule.n_qubits)]
            cols.append(int(np.ravel_multi_index(bits + [schedule.initial_photons], dims)))
    else:
        for b in (0, 1):
            bits = [0] * schedule.n_qubits
            bits[schedule.input_qubit] = b
            cols.append(int(np.ravel_multi_index(bits + [schedule.initial_photons], dims)))
    return cols


def _prepare(schedule: PulseSchedule, psi: np.ndarray) -> np.ndarray:
    """Logical input state -> full-space vector."""
    sp = schedule.space
    full = np.zeros(sp.size, dtype=complex)
    for amp, col in zip(psi, _input_columns(schedule)):
        full[col] = amp
    return full


def _readout(schedule: PulseSchedule, rho: np.ndarray) -> np.ndarray:
    """Full-space density matrix -> logical density matrix (not renormalized)."""
    from .quantum import partial_trace

    sp = schedule.space
    st = State(rho, sp)
    if schedule.kind == "gate":
        out = partial_trace(st, range(schedule.n_qubits)).data
    elif schedule.output == "resonator":
        out = partial_trace(st, [schedule.n_qubits]).data[:2, :2]
    else:
        out = partial_trace(st, [int(schedule.output)]).data
    if schedule.output_correction is not None:
        c = schedule.output_correction
        out = c @ out @ c.conj().T
    return out


def _ideal_outputs(schedule: PulseSchedule):
    u = schedule.ideal_target.matrix
    return [(label, psi, u @ psi) for label, psi in stabilizer_inputs(schedule.logical_qubits)]


def _kraus(schedule: PulseSchedule, u_full: np.ndarray) -> list[np.ndarray]:
    dims = schedule.space.dims
    nq = 2 ** schedule.n_qubits
    nres = dims[-1]
    t = u_full.reshape(nq, nres, nq, nres)
    return [t[:, m, :, schedule.initial_photons] for m in range(nres)]


def _state_fidelities_from_unitary(schedule: PulseSchedule, u_full: np.ndarray) -> list[float]:
    fids = []
    for _, psi, target in _ideal_outputs(schedule):
        out = u_full @ _prepare(schedule, psi)
        rho = _readout(schedule, np.outer(out, out.conj()))
        fids.append(float(np.real(target.conj() @ rho @ target)))
    return fids


def _state_fidelities_from_superop(schedule: PulseSchedule, s_full: np.ndarray) -> list[float]:
    fids = []
    for _, psi, target in _ideal_outputs(schedule):
        v = _prepare(schedule, psi)
        rho = apply_superop(s_full, np.outer(v, v.conj()))
        out = _readout(schedule, rho)
        fids.append(float(np.real(target.conj() @ out @ target)))
    return fids


def lindblad_channels(rates: Mapping[str, float], sp: HilbertSpace, n_qubits: int
                      ) -> list[LindbladChannel]:
    """Markovian channels from a ``{name: rate}`` map (rates in 1/ns).

    ``T1`` -> sigma_- per qubit, ``T2`` -> sigma_z per qubit at half the rate,
    ``kappa`` -> resonator a.  ``T2star`` is quasi-static and handled elsewhere.
    """
    chans = []
    for name, rate in rates.items():
        if not rate:
            continue
        if name == "T1":
            chans += [LindbladChannel(embed(sigma_minus(), i, sp), rate, f"T1[{i}]") for i in range(n_qubits)]
        elif name == "T2":
            chans += [LindbladChannel(embed(sigma_z(), i, sp), rate / 2, f"T2[{i}]") for i in range(n_qubits)]
        elif name == "kappa":
            chans.append(LindbladChannel(embed(destroy(sp.dims[-1]), n_qubits, sp), rate, "kappa"))
        elif name != "T2star":
            raise ValueError(f"unknown noise channel {name!r}")
    return chans


def _quasi_static_detunings(n_traj: int, n_qubits: int, rate: float, seed: int) -> np.ndarray:
    from .noise import t2star_sigma, trajectory_rng

    sigma = t2star_sigma(rate)
    return np.array([trajectory_rng(seed, j).normal(0.0, sigma, size=n_qubits) for j in range(n_traj)])


def _detuning_perturbation(schedule: PulseSchedule, shifts: np.ndarray) -> list[Operator]:
    sp = schedule.space
    op = zero_operator(sp)
    for i, s in enumerate(shifts):
        op = op + 0.5 * s * embed(sigma_z(), i, sp)
    return [op for _ in schedule.segments]


def schedule_superoperator(schedule: PulseSchedule, channels: Sequence[LindbladChannel],
                           extra: Sequence[Operator] = ()) -> np.ndarray:
    """Full-space superoperator of the schedule under its effective Hamiltonians."""
    segs = []
    for k, seg in enumerate(schedule.segments):
        h, frame = _segment_hamiltonian(seg, schedule.n_qubits, "effective")
        if extra:
            h = h + extra[k]
        segs.append((h, seg.duration))
    if not segs:
        return np.eye(schedule.space.size ** 2, dtype=complex)
    return lindblad_superoperator(segs, channels)


def verify_gate(schedule: PulseSchedule, mode: str = "effective", noise=None, n_traj: int = 1,
                seed: int = 0) -> FidelityReport:
    """Simulate ``schedule`` and compare it with its ideal action.

    ``effective`` / ``exact_full`` are unitary: gates report the (leakage-aware)
    average gate fidelity of the qubit block; transfers report the mean state
    fidelity over the stabilizer inputs.  ``lindblad`` adds the Markovian
    channels of ``noise`` (a NoiseModel or a ``{name: rate}`` map) plus a
    quasi-static ``T2star`` detuning ensemble over ``n_traj`` trajectories, and
    always reports the mean stabilizer-input state fidelity.
    """
    if mode not in ("effective", "exact_full", "lindblad"):
        raise ValueError(f"unknown verification mode {mode!r}")
    rates = dict(getattr(noise, "channels", noise) or {})
    if mode in ("effective", "exact_full"):
        u_full, top = schedule_propagator(schedule, mode)
        fids = _state_fidelities_from_unitary(schedule, u_full)
        extra = {"top_fock_population": top, "state_fidelities": fids}
        if schedule.kind == "gate":
            kraus = _kraus(schedule, u_full)
            fbar = kraus_average_fidelity(kraus, schedule.ideal_target)
            return FidelityReport(schedule.name, mode, fbar, 0.0, 1, seed, schedule.duration,
                                  average_gate_fidelity=fbar, extra=extra)
        m = float(np.mean(fids))
        return FidelityReport(schedule.name, mode, m, 0.0, 1, seed, schedule.duration,
                              metric="stabilizer_state_mean", extra=extra)

    sp = schedule.space
    chans = lindblad_channels(rates, sp, schedule.n_qubits)
    t2s_rate = rates.get("T2star", 0.0)
    n = max(1, n_traj) if t2s_rate else 1
    shifts = (_quasi_static_detunings(n, schedule.n_qubits, t2s_rate, seed) if t2s_rate
              else np.zeros((1, schedule.n_qubits)))
    per_traj = []
    for sh in shifts:
        extra_ops = _detuning_perturbation(schedule, sh) if np.any(sh) else ()
        s_full = schedule_superoperator(schedule, chans, extra_ops)
        per_traj.append(float(np.mean(_state_fidelities_from_superop(schedule, s_full))))
    vals = np.array(per_traj)
    return FidelityReport(schedule.name, mode, math.fsum(vals) / len(vals),
                          float(vals.std(ddof=1)) if len(vals) > 1 else 0.0, len(vals), seed,
                          schedule.duration, metric="stabilizer_state_mean",
                          extra={"channels": sorted(rates)})


def transfer_state(schedule: PulseSchedule, psi: np.ndarray, mode: str = "exact_full"
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Run a transfer on logical input ``psi``; returns (logical output dm, full final vector)."""
    u_full, _ = schedule_propagator(schedule, mode)
    out = u_full @ _prepare(schedule, np.asarray(psi, dtype=complex))
    return _readout(schedule, np.outer(out, out.conj())), out


# --------------------------------------------------------------------------
# initialization


@dataclass(frozen=True)
class InitResult:
    result: SimResult
    fidelity: float
    t_final: float
    sweep_rate: float | None


def adiabatic_initialize(T: float, t_final: float | None = None,
                         sweep: Callable[[float], float] | None = None,
                         delta0: float | None = None, n_steps: int = 4000,
                         initial: str = "ground") -> InitResult:
    """Sweep the offset from ``delta0 >= 20 T`` to the optimal point Delta = 0.

    Starts in the loaded charge state |(0,2)S> (``initial='charge'``) or in the
    exact ground state of the Hamiltonian at ``delta0`` (``initial='ground'``)
    and reports the final overlap with the logical |0>.  The default
    sweep is linear at dDelta/dt = T^2/10; ``t_final = 0`` is an instantaneous
    quench.  A custom ``sweep`` maps t in [0, t_final] to Delta(t).
    """
    if T <= 0:
        raise ValueError("T must be positive")
    delta0 = 20.0 * T if delta0 is None else delta0
    if delta0 < 20.0 * T:
        raise ValueError("initial offset must satisfy Delta(0) >= 20 T")
    rate = None
    if sweep is None:
        if t_final is None:
            t_final = delta0 / (T ** 2 / 10.0)
        rate = delta0 / t_final if t_final > 0 else math.inf

        def sweep(t, _tf=t_final):
            return delta0 * (1.0 - t / _tf) if _tf > 0 else 0.0
    else:
        if t_final is None:
            raise ValueError("a custom sweep needs t_final")
        if abs(sweep(0.0) - delta0) > 1e-9 * delta0 or abs(sweep(t_final)) > 1e-9 * delta0:
            raise ValueError("sweep must run from delta0 to 0")
    if initial == "charge":
        psi0 = pure(np.array([0.0, 1.0], dtype=complex))
    elif initial == "ground":
        psi0 = pure(np.linalg.eigh(build_reduced_hamiltonian(delta0, T).matrix)[1][:, 0])
    else:
        raise ValueError("initial must be 'charge' or 'ground'")
    zero = qubit_basis()[:, 0]
    if t_final == 0:
        res = SimResult(np.array([0.0]), (psi0,))
    else:
        dt = t_final / n_steps
        segs = [(build_reduced_hamiltonian(sweep((k + 0.5) * dt), T), dt) for k in range(n_steps)]
        res = evolve_unitary(segs, psi0, [0.0, t_final])
    fid = float(abs(np.vdot(zero, res.final.data)) ** 2)
    return InitResult(res, fid, float(t_final), rate)
