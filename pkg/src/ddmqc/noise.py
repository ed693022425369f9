"""Coupling-fluctuation noise, unwanted-phase statistics and Monte-Carlo gate fidelity.

The common source is a fluctuation ``dlam(t)`` of the dispersive exchange rate
``lam = g^2/delta``; each gate converts it into its own rate fluctuation with
the gain stored in ``schedule.metadata['noise_gain']``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np
from scipy import stats

from .quantum import (
    apply_superop,
    matrix_exponential,
    mean_state_fidelity,
    process_fidelity,
    superop_average_fidelity,
    unitary_superop,
)

KINDS = ("quasi_static_gaussian", "ornstein_uhlenbeck")
CHANNELS = ("T1", "T2", "T2star", "kappa")


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for trajectory ``index``; independent of execution order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian fluctuation of the exchange rate plus optional Markovian channels.

    ``sigma`` is the rms of dlam in rad/ns.  ``channels`` maps channel names
    (T1, T2, T2star, kappa) to rates in 1/ns; absent or zero means off.
    """

    kind: str = "quasi_static_gaussian"
    sigma: float = 0.0
    tau_c: float | None = None
    channels: Mapping[str, float] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not self.sigma >= 0:
            raise ValueError("sigma must be non-negative")
        if self.kind == "ornstein_uhlenbeck" and not (self.tau_c and self.tau_c > 0):
            raise ValueError("an Ornstein-Uhlenbeck model needs tau_c > 0")
        for k, v in self.channels.items():
            if k not in CHANNELS:
                raise ValueError(f"unknown channel {k!r}")
            if v < 0:
                raise ValueError(f"channel rate {k} must be non-negative")

    def with_(self, **changes) -> "NoiseModel":
        return replace(self, **changes)

    def analytic_phase_variance(self, t: float) -> float:
        """Var of the integrated fluctuation over [0, t]."""
        if self.kind == "quasi_static_gaussian":
            return self.sigma ** 2 * t ** 2
        tau = self.tau_c
        return 2 * self.sigma ** 2 * tau ** 2 * (t / tau - 1 + math.exp(-t / tau))


def t2star_sigma(rate: float) -> float:
    """rms quasi-static qubit detuning giving coherence exp(-(t/T2*)^2) for rate = 1/T2*."""
    return math.sqrt(2.0) * rate


# --------------------------------------------------------------------------
# trajectories


def _ou_path(rng: np.random.Generator, sigma: float, tau: float, n: int, dt: float) -> np.ndarray:
    # exact discretization, started in the stationary distribution
    a = math.exp(-dt / tau)
    b = sigma * math.sqrt(1 - a * a)
    xi = rng.standard_normal(n)
    out = np.empty(n)
    out[0] = sigma * xi[0]
    for k in range(1, n):
        out[k] = a * out[k - 1] + b * xi[k]
    return out


def sample_trajectory(model: NoiseModel, duration: float, dt: float, seed: int | None = None,
                      index: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """One realization of dlam on the grid ``0, dt, ..., duration``."""
    if duration < 0 or dt <= 0:
        raise ValueError("need duration >= 0 and dt > 0")
    if model.kind == "ornstein_uhlenbeck" and dt > model.tau_c / 10 * (1 + 1e-12):
        raise ValueError("dt must not exceed tau_c/10 for the Ornstein-Uhlenbeck model")
    n = int(round(duration / dt)) + 1
    t = np.linspace(0.0, dt * (n - 1), n)
    rng = trajectory_rng(model.seed if seed is None else seed, index)
    if model.sigma == 0:
        return t, np.zeros(n)
    if model.kind == "quasi_static_gaussian":
        return t, np.full(n, model.sigma * rng.standard_normal())
    return t, _ou_path(rng, model.sigma, model.tau_c, n, dt)


def sample_phases(model: NoiseModel, t_gate: float, n: int, seed: int | None = None,
                  dt: float | None = None) -> np.ndarray:
    """Integrated phases phi_j = int_0^t dlam dt for trajectories j = 0..n-1."""
    seed = model.seed if seed is None else seed
    if model.sigma == 0 or t_gate == 0:
        return np.zeros(n)
    if model.kind == "quasi_static_gaussian":
        return np.array([model.sigma * t_gate * trajectory_rng(seed, j).standard_normal()
                         for j in range(n)])
    if dt is None:
        dt = min(model.tau_c / 20, t_gate / 50)
    steps = max(1, math.ceil(t_gate / dt))
    h = t_gate / steps
    out = np.empty(n)
    for j in range(n):
        x = _ou_path(trajectory_rng(seed, j), model.sigma, model.tau_c, steps + 1, h)
        out[j] = h * (x.sum() - 0.5 * (x[0] + x[-1]))
    return out


@dataclass(frozen=True)
class PhaseStatistics:
    var_phi: float
    std_error: float
    n_samples: int
    mean: float
    skewness: float
    excess_kurtosis: float
    histogram: tuple[np.ndarray, np.ndarray]

    @property
    def gaussian(self) -> bool:
        return abs(self.skewness) < 0.1 and abs(self.excess_kurtosis) < 0.2


def phase_statistics(phi: np.ndarray, bins: int = 41) -> PhaseStatistics:
    phi = np.asarray(phi, dtype=float)
    n = phi.size
    mean = math.fsum(phi) / n
    dev2 = (phi - mean) ** 2
    var = math.fsum(dev2) / (n - 1)
    se = float(np.std(dev2, ddof=1) / math.sqrt(n))
    if var > 0:
        skew = float(stats.skew(phi))
        kurt = float(stats.kurtosis(phi))
    else:
        skew = kurt = 0.0
    hist = np.histogram(phi, bins=bins)
    return PhaseStatistics(var, se, n, mean, skew, kurt, hist)


def phase_variance(model: NoiseModel, t_gate: float, n_samples: int = 10_000,
                   seed: int | None = None) -> PhaseStatistics:
    if n_samples < 1000:
        raise ValueError("phase_variance needs at least 1000 samples")
    return phase_statistics(sample_phases(model, t_gate, n_samples, seed))


def calibrate(target_var: float, t_gate: float, kind: str = "quasi_static_gaussian",
              tau_c: float | None = None, **kw) -> NoiseModel:
    """Model whose analytic Var(phi) at ``t_gate`` equals ``target_var`` (rad^2)."""
    if not target_var > 0:
        raise ValueError("target variance must be positive")
    if not t_gate > 0:
        raise ValueError("gate time must be positive")
    unit = NoiseModel(kind=kind, sigma=1.0, tau_c=tau_c, **kw)
    # Var is proportional to sigma^2 for both kinds
    return unit.with_(sigma=math.sqrt(target_var / unit.analytic_phase_variance(t_gate)))


def config_fragment(model: NoiseModel) -> str:
    """``[noise]`` section in the CLI config format (sigma in linear GHz)."""
    lines = ["[noise]", f"kind = {model.kind}", f"sigma = {model.sigma / (2 * math.pi)!r}"]
    if model.tau_c is not None:
        lines.append(f"tau_c = {model.tau_c!r}")
    for k in CHANNELS:
        if model.channels.get(k):
            key = "T_kappa" if k == "kappa" else k
            lines.append(f"{key} = {1.0 / model.channels[k]!r}")
    lines.append(f"seed = {model.seed}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# noisy gate fidelity


def logical_superoperator(schedule, channels: Mapping[str, float]) -> np.ndarray:
    """Row-major superoperator on the logical register under the Markovian channels."""
    from .gates import _input_columns, _readout, lindblad_channels, schedule_superoperator

    sp = schedule.space
    chans = lindblad_channels({k: v for k, v in channels.items() if k != "T2star"}, sp,
                              schedule.n_qubits)
    s_full = schedule_superoperator(schedule, chans)
    cols = _input_columns(schedule)
    d = len(cols)
    out = np.zeros((d * d, d * d), dtype=complex)
    for i, ci in enumerate(cols):
        for j, cj in enumerate(cols):
            rho = np.zeros((sp.size, sp.size), dtype=complex)
            rho[ci, cj] = 1.0
            out[:, i * d + j] = _readout(schedule, apply_superop(s_full, rho)).reshape(-1)
    return out


def _t2star_unitaries(schedule, rate: float, rng: np.random.Generator) -> np.ndarray:
    from .quantum import embed, sigma_z, zero_operator, HilbertSpace

    n = schedule.logical_qubits
    sp = HilbertSpace((2,) * n)
    h = zero_operator(sp)
    for i, s in enumerate(rng.normal(0.0, t2star_sigma(rate), size=n)):
        h = h + 0.5 * s * embed(sigma_z(), i, sp)
    return matrix_exponential(h, schedule.duration).matrix


def _ensemble(schedule, model: NoiseModel, base: np.ndarray, n_traj: int, seed: int,
              use_phase: bool, use_t2star: bool):
    u_ideal = schedule.ideal_target.matrix
    nq = schedule.logical_qubits
    gen = schedule.metadata.get("error_generator")
    gain = schedule.metadata.get("noise_gain", 0.0)
    phases = (gain * sample_phases(model, schedule.duration, n_traj, seed)
              if use_phase and gen is not None else np.zeros(n_traj))
    rate = model.channels.get("T2star", 0.0) if use_t2star else 0.0
    fs, fbar, fpro = [], [], []
    for j in range(n_traj):
        s = base
        if phases[j]:
            s = unitary_superop(matrix_exponential(gen, phases[j]).matrix) @ s
        if rate:
            # independent stream from the phase draw of the same trajectory
            rng = trajectory_rng(seed, n_traj + j)
            s = unitary_superop(_t2star_unitaries(schedule, rate, rng)) @ s
        fs.append(mean_state_fidelity(s, u_ideal, nq))
        fbar.append(superop_average_fidelity(s, u_ideal))
        fpro.append(process_fidelity(s, u_ideal))
    return np.array(fs), np.array(fbar), np.array(fpro), phases


def noisy_gate_fidelity(schedule, model: NoiseModel, n_traj: int = 1000,
                        seed: int | None = None, breakdown: bool = True):
    """Monte-Carlo fidelity of ``schedule`` under ``model``.

    Each trajectory applies ``exp(-i phi G)`` after the (Lindblad-evolved)
    schedule, with ``phi = gain * int dlam dt``.  ``mean_fidelity`` is the mean
    state fidelity over the stabilizer inputs; the average gate fidelity and
    process fidelity of the same ensemble are reported alongside.
    """
    from .gates import FidelityReport

    if n_traj < 1:
        raise ValueError("n_traj must be positive")
    seed = model.seed if seed is None else seed
    active = {k: v for k, v in model.channels.items() if v}
    markov = {k: v for k, v in active.items() if k != "T2star"}
    base = logical_superoperator(schedule, markov)

    fs, fbar, fpro, phases = _ensemble(schedule, model, base, n_traj, seed, True, True)
    parts = {}
    if breakdown:
        clean = logical_superoperator(schedule, {})
        parts["coherent_error"] = 1 - mean_state_fidelity(clean, schedule.ideal_target.matrix,
                                                          schedule.logical_qubits)
        if model.sigma:
            f, *_ = _ensemble(schedule, model, clean, n_traj, seed, True, False)
            parts["dlam"] = 1 - math.fsum(f) / n_traj
        for name, rate in active.items():
            if name == "T2star":
                f, *_ = _ensemble(schedule, model, clean, n_traj, seed, False, True)
            else:
                f, *_ = _ensemble(schedule, model, logical_superoperator(schedule, {name: rate}),
                                  1, seed, False, False)
            parts[name] = 1 - math.fsum(f) / len(f)
    mean = math.fsum(fs) / n_traj
    var_phi = float(np.var(phases, ddof=1)) if n_traj > 1 else 0.0
    return FidelityReport(
        schedule.name, "noisy", min(1.0, mean), float(np.std(fs, ddof=1)) if n_traj > 1 else 0.0,
        n_traj, seed, schedule.duration, metric="stabilizer_state_mean",
        average_gate_fidelity=math.fsum(fbar) / n_traj, process_fidelity=math.fsum(fpro) / n_traj,
        breakdown=parts, var_phi=var_phi)
