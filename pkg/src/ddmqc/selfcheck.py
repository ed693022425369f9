"""Fast headless property suite behind ``ddmqc selftest``."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .device import ghz
from .dynamics import (
    LindbladChannel, build_dispersive_two_qubit, build_jc, evolve_lindblad, evolve_unitary,
    total_excitation,
)
from .gates import (
    GateParams, sqrt_iswap_target, synthesize_qubit_photon_swap,
    synthesize_rx, synthesize_rz, synthesize_sqrt_iswap, transport_qubit, schedule_propagator,
)
from .noise import NoiseModel, calibrate, noisy_gate_fidelity, phase_variance
from .quantum import Operator, destroy, embed, ket, matrix_exponential, sigma_minus
from .readout import ReadoutParams, lorentzian, measurement_time


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def check_unitarity() -> str:
    rng = np.random.default_rng(0)
    worst = max(matrix_exponential(Operator.from_matrix(_random_hermitian(rng, n) * 10), t)
                .unitarity_error() for n in (2, 6, 24) for t in (-3.0, 0.1, 7.0))
    assert worst < 1e-10, worst
    return f"max ||U^dag U - I|| = {worst:.1e}"


def check_norm_and_excitation() -> str:
    h = build_jc(ghz(0.125), 5, n_qubits=2)
    n_exc = total_excitation(h.space).matrix
    comm = np.max(np.abs(h.matrix @ n_exc - n_exc @ h.matrix))
    assert comm < 1e-12, comm
    psi = ket(h.space.dims, 1, 0, 1)
    res = evolve_unitary([(h, 0.01)] * 400, psi, np.linspace(0, 4, 9))
    drift = max(abs(np.linalg.norm(s.data) - 1) for s in res.states)
    assert drift < 1e-10, drift
    return f"[H, N] = {comm:.1e}, norm drift {drift:.1e}"


def check_lindblad_invariants() -> str:
    h = build_jc(ghz(0.125), 3)
    sp = h.space
    chans = [LindbladChannel(embed(sigma_minus(), 0, sp), 0.2, "T1"),
             LindbladChannel(embed(destroy(4), 1, sp), 0.1, "kappa")]
    res = evolve_lindblad(h, chans, ket(sp.dims, 1, 1), np.linspace(0, 5, 11))
    tr = max(abs(np.trace(s.data) - 1) for s in res.states)
    herm = max(np.max(np.abs(s.data - s.data.conj().T)) for s in res.states)
    assert tr < 1e-8 and herm < 1e-8 and res.min_eigenvalue > -1e-7
    return f"trace {tr:.1e}, hermiticity {herm:.1e}, min eig {res.min_eigenvalue:.1e}"


def check_gate_targets() -> str:
    p = GateParams.feasibility()
    scheds = [synthesize_rx(1.0, p), synthesize_rz(1.0, p.with_(omega=ghz(0.001))),
              synthesize_sqrt_iswap(p), synthesize_qubit_photon_swap(p), transport_qubit(0, 1, p)]
    worst = max(s.ideal_target.unitarity_error() for s in scheds)
    assert worst < 1e-10
    rx = scheds[0]
    assert abs(rx.duration * rx.metadata["rate"] - 1.0) < 1e-12
    return f"targets unitary to {worst:.1e}"


def check_sqrt_iswap_structure() -> str:
    p = GateParams.feasibility()
    s = synthesize_sqrt_iswap(p)
    lam = p.g ** 2 / p.two_qubit_delta
    h = build_dispersive_two_qubit(p.g, p.two_qubit_delta, 0.0, 0.0, 2, frame="rotating")
    u = matrix_exponential(h, math.pi / (4 * lam)).matrix.reshape(4, 3, 4, 3)[:, 1, :, 1]
    err = np.max(np.abs(u - sqrt_iswap_target().matrix))
    assert err < 1e-9, err
    return f"one-photon block vs target {err:.1e}"


def check_transport_conservation() -> str:
    p = GateParams.feasibility()
    tr = transport_qubit(0, 1, p)
    u, _ = schedule_propagator(tr, "exact_full")
    n_exc = total_excitation(tr.space).matrix
    err = np.max(np.abs(u @ n_exc - n_exc @ u))
    assert err < 1e-10, err
    return f"[U, N] = {err:.1e}"


def check_determinism() -> str:
    p = GateParams.feasibility()
    s = synthesize_sqrt_iswap(p)
    m = calibrate(5e-3 * math.pi, s.duration)
    a = noisy_gate_fidelity(s, m, 200, seed=7)
    b = noisy_gate_fidelity(s, m, 200, seed=7)
    assert a.mean_fidelity == b.mean_fidelity and a.std == b.std
    return f"F = {a.mean_fidelity!r} twice"


def check_phase_variance() -> str:
    m = NoiseModel(sigma=0.02)
    st = phase_variance(m, 8.0, 4000, seed=3)
    exact = m.analytic_phase_variance(8.0)
    assert abs(st.var_phi - exact) < 3 * st.std_error
    return f"Var = {st.var_phi:.5f} vs {exact:.5f} (SE {st.std_error:.1e})"


def check_readout_identities() -> str:
    rp = ReadoutParams(ghz(0.125), ghz(5), ghz(10), ghz(0.001))
    x = np.linspace(0, 0.05, 11)
    asym = np.max(np.abs(lorentzian(1 + x, 1.0, 0.01) - lorentzian(1 - x, 1.0, 0.01)))
    mt = measurement_time(rp)
    assert asym < 1e-12 and abs(mt.t_m * mt.gamma_phi - 1) < 1e-15
    return f"spectrum asymmetry {asym:.1e}, t_m*gamma = {mt.t_m * mt.gamma_phi!r}"


CHECKS: dict[str, Callable[[], str]] = {
    "unitarity": check_unitarity,
    "norm_and_excitation": check_norm_and_excitation,
    "lindblad_invariants": check_lindblad_invariants,
    "gate_targets": check_gate_targets,
    "sqrt_iswap_structure": check_sqrt_iswap_structure,
    "transport_conservation": check_transport_conservation,
    "determinism_under_seed": check_determinism,
    "quasi_static_variance": check_phase_variance,
    "readout_identities": check_readout_identities,
}


def run_all() -> list[CheckResult]:
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for name, fn in CHECKS.items():
            try:
                out.append(CheckResult(name, True, fn()))
            except Exception as exc:  # report every failure, keep going
                out.append(CheckResult(name, False, f"{type(exc).__name__}: {exc}"))
    return out
