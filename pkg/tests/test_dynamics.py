import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddmqc.device import DeviceParams, ghz
from ddmqc.dynamics import (
    HamiltonianSpec, LindbladChannel, build_dispersive_two_qubit, build_dispersive_x,
    build_dispersive_z, build_driven_single_qubit, build_jc, dephasing_rates, evolve_lindblad,
    evolve_unitary, qubit_resonator_space, rabi_frequency, total_excitation, write_trajectory_csv,
    z_rotation_rate,
)
from ddmqc.errors import DispersiveRegimeError, NumericalError
from ddmqc.quantum import (
    HilbertSpace, Operator, State, destroy, embed, ket, partial_trace, product_state, pure,
    sigma_minus, sigma_z, state_fidelity, zero_operator,
)

G = ghz(0.125)


def comm(a, b):
    return a.matrix @ b.matrix - b.matrix @ a.matrix


def test_jc_zero_coupling():
    assert np.all(build_jc(0.0, 4).matrix == 0)


def test_jc_matrix_element():
    h = build_jc(G, 4)
    bra = ket([2, 5], 1, 0).data
    k = ket([2, 5], 0, 1).data
    assert bra.conj() @ h.matrix @ k == pytest.approx(G)


def test_jc_conserves_excitation():
    h = build_jc(G, 6)
    n = total_excitation(h.space)
    assert np.max(np.abs(comm(h, n))) < 1e-12


def test_driven_rabi_frequency_feasibility():
    om_r = rabi_frequency(ghz(10), G, ghz(10), ghz(5))
    assert om_r == pytest.approx(ghz(0.5), rel=1e-12)
    assert 1 / om_r == pytest.approx(0.318, abs=5e-4)


def test_driven_hamiltonian_properties():
    spec = HamiltonianSpec("driven_single_qubit", g=G, omega=ghz(5), omega0=ghz(10),
                           omega_dr=ghz(5), Omega=ghz(10), n_max=4)
    h = build_driven_single_qubit(spec)
    assert h.hermiticity_error() < 1e-12
    # without drive it is the detuned JC model in the drive frame
    h0 = build_driven_single_qubit(spec.with_(Omega=0.0))
    sp = h0.space
    a = embed(destroy(5), 1, sp)
    sm = embed(sigma_minus(), 0, sp)
    jc = (ghz(5) * (a.dag() @ a) + 0.5 * 0.0 * embed(sigma_z(), 0, sp)
          - G * (a.dag() @ sm + a @ sm.dag()))
    assert np.allclose(h0.matrix, jc.matrix)
    with pytest.raises(ZeroDivisionError):
        build_driven_single_qubit(spec.with_(omega_dr=ghz(10)))


def test_dispersive_x_resonant_choice_is_pure_sigma_x():
    w, w0 = ghz(5), ghz(10)
    chi = G ** 2 / (w - w0)
    spec = HamiltonianSpec("dispersive_x", g=G, omega=w, omega0=w0, omega_dr=w + chi,
                           Omega=ghz(10), n_max=3)
    h = build_dispersive_x(spec)
    q = h.matrix.reshape(2, 4, 2, 4)[:, 0, :, 0]
    assert abs(q[0, 0]) < 1e-12 and abs(q[1, 1]) < 1e-12
    assert q[0, 1] == pytest.approx(spec.rabi / 2)


def test_dispersive_x_limits_and_precondition():
    spec = HamiltonianSpec("dispersive_x", g=G, omega=ghz(5), omega0=ghz(10),
                           omega_dr=ghz(5), Omega=0.0, n_max=2)
    h = build_dispersive_x(spec)
    q = h.matrix.reshape(2, 3, 2, 3)[:, 0, :, 0]
    assert np.allclose(q, np.diag(np.diag(q)))
    assert spec.with_(g=1e-9).stark_shift == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DispersiveRegimeError):
        build_dispersive_x(spec.with_(omega=ghz(10.2)))
    with pytest.warns(RuntimeWarning):
        build_dispersive_x(spec.with_(omega=ghz(10.2), force=True))


def test_dispersive_z_feasibility_rate():
    spec = HamiltonianSpec("dispersive_z", g=G, omega=ghz(0.001), omega0=ghz(10),
                           omega_dr=ghz(5), Omega=ghz(10), n_max=2)
    rate = z_rotation_rate(spec)
    assert abs(rate) == pytest.approx(ghz(5.0), rel=0.01)
    assert 0.025 <= 1 / abs(rate) <= 0.035
    h = build_dispersive_z(spec)
    q = h.matrix.reshape(2, 3, 2, 3)[:, 0, :, 0]
    assert q[1, 1] - q[0, 0] == pytest.approx(rate)


def test_dispersive_z_consistency_and_quadratic_drive_term():
    w, w0 = ghz(5), ghz(10)
    chi = G ** 2 / (w - w0)
    spec = HamiltonianSpec("dispersive_z", g=G, omega=w, omega0=w0, omega_dr=w + chi, Omega=0.0)
    assert z_rotation_rate(spec) == 0.0
    base = HamiltonianSpec("dispersive_z", g=G, omega=ghz(0.001), omega0=w0, omega_dr=ghz(5),
                           Omega=ghz(1))
    def drive_term(s):
        return z_rotation_rate(s) - z_rotation_rate(s.with_(Omega=0.0))
    assert drive_term(base.with_(Omega=ghz(2))) == pytest.approx(4 * drive_term(base), rel=1e-12)
    with pytest.raises(DispersiveRegimeError):
        build_dispersive_z(base.with_(omega=ghz(5.1)))


def test_two_qubit_dispersive_structure():
    delta = ghz(1)
    h = build_dispersive_two_qubit(G, delta, ghz(11), ghz(10), 3)
    lam = G ** 2 / delta
    assert lam == pytest.approx(ghz(0.015625))
    a = ket([2, 2, 4], 0, 1, 0).data
    b = ket([2, 2, 4], 1, 0, 0).data
    assert a.conj() @ h.matrix @ b == pytest.approx(lam)
    n = total_excitation(h.space)
    assert np.max(np.abs(comm(h, n))) < 1e-12
    hr = build_dispersive_two_qubit(G, delta, ghz(11), ghz(10), 3, frame="rotating")
    assert np.max(np.abs(comm(hr, n))) < 1e-12
    with pytest.raises(DispersiveRegimeError):
        build_dispersive_two_qubit(G, 2 * G, ghz(11), ghz(10), 3)


def test_evolve_unitary_zero_hamiltonian():
    psi = pure(np.array([0.6, 0.8j]))
    res = evolve_unitary(Operator.from_matrix(np.zeros((2, 2))), psi, [0, 1, 5])
    for s in res.states:
        assert np.allclose(s.data, psi.data)


def test_vacuum_rabi_oscillation():
    h = build_jc(G, 3)
    psi0 = ket([2, 4], 1, 0)
    ts = np.linspace(0, 10, 41)
    res = evolve_unitary(h, psi0, ts)
    target = ket([2, 4], 0, 1)
    pops = np.array([state_fidelity(target, s) for s in res.states])
    assert np.max(np.abs(pops - np.sin(G * ts) ** 2)) < 1e-12
    assert res.top_fock_population < 1e-12


def test_norm_drift_over_many_segments():
    rng = np.random.default_rng(0)
    segs = []
    for _ in range(1200):
        a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        segs.append((Operator.from_matrix((a + a.conj().T) / 2, (6,)), 0.01))
    psi0 = ket([6], 0)
    res = evolve_unitary(segs, psi0, [0, 6, 12])
    assert abs(np.linalg.norm(res.final.data) - 1) < 1e-9


def _reduced_qubit_infidelity(g, ratio, om_r):
    w0 = ghz(10)
    delta = -ratio * g
    w = w0 + delta
    chi = g ** 2 / delta
    omega = om_r * (w0 - (w + chi)) / (2 * g)
    spec = HamiltonianSpec("driven_single_qubit", g=g, omega=w, omega0=w0, omega_dr=w + chi,
                           Omega=omega, n_max=5)
    t = math.pi / om_r
    psi0 = ket([2, 6], 0, 0)
    full = evolve_unitary(build_driven_single_qubit(spec), psi0, [t]).final
    eff = evolve_unitary(build_dispersive_x(spec.with_(kind="dispersive_x")), psi0, [t]).final
    rq_full = partial_trace(full, [0])
    rq_eff = partial_trace(eff.dm(), [0])
    psi_eff = np.linalg.eigh(rq_eff.data)[1][:, -1]
    return 1 - state_fidelity(pure(psi_eff), rq_full)


def test_full_vs_effective_dispersive_scaling():
    e1 = _reduced_qubit_infidelity(G, 8, G / 2)
    e2 = _reduced_qubit_infidelity(G, 16, G / 2)
    assert e1 <= 5 * (1 / 8) ** 2
    assert 2.5 <= e1 / e2 <= 6


def test_lindblad_without_channels_matches_unitary():
    h = build_jc(G, 3, resonator_detuning=0.3)
    psi0 = pure((ket([2, 4], 1, 0).data + ket([2, 4], 0, 1).data) / math.sqrt(2), (2, 4))
    ts = [0, 1.0, 2.5]
    u = evolve_unitary(h, psi0, ts)
    l = evolve_lindblad(h, [], psi0.dm(), ts)
    for a, b in zip(u.states, l.states):
        assert np.max(np.abs(a.dm().data - b.data)) < 1e-8


def test_lindblad_t1_decay():
    T1 = 1000.0
    sp = HilbertSpace((2,))
    ch = LindbladChannel(sigma_minus(), 1 / T1, "T1")
    ts = np.linspace(0, 3000, 7)
    res = evolve_lindblad(zero_operator(sp), [ch], ket([2], 1).dm(), ts)
    p1 = np.array([s.data[1, 1].real for s in res.states])
    assert np.max(np.abs(p1 - np.exp(-ts / T1))) < 1e-6


def test_lindblad_photon_decay():
    kappa = ghz(10) / 1e4
    sp = HilbertSpace((4,))
    a = destroy(4)
    ts = np.linspace(0, 500, 11)
    res = evolve_lindblad(zero_operator(sp), [LindbladChannel(a, kappa, "kappa")], ket([4], 1).dm(), ts)
    n = np.array([s.expect(a.dag() @ a).real for s in res.states])
    assert np.max(np.abs(n - np.exp(-kappa * ts))) < 1e-6


@given(st.integers(0, 200))
@settings(max_examples=15, deadline=None)
def test_lindblad_invariants(seed):
    rng = np.random.default_rng(seed)
    sp = qubit_resonator_space(1, 3)
    h = build_jc(G, 3, resonator_detuning=rng.uniform(-1, 1))
    chans = [
        LindbladChannel(embed(sigma_minus(), 0, sp), rng.uniform(0, 0.05), "T1"),
        LindbladChannel(embed(sigma_z(), 0, sp), rng.uniform(0, 0.05), "T2"),
        LindbladChannel(embed(destroy(4), 1, sp), rng.uniform(0, 0.05), "kappa"),
    ]
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi = pure(v / np.linalg.norm(v), sp.dims)
    res = evolve_lindblad(h, chans, psi.dm(), np.linspace(0, 20, 5))
    for s in res.states:
        assert abs(np.trace(s.data) - 1) < 1e-8
        assert np.max(np.abs(s.data - s.data.conj().T)) < 1e-8
        assert np.linalg.eigvalsh(s.data).min() >= -1e-7


def test_lindblad_step_failure_is_reported():
    sp = HilbertSpace((2,))
    ch = LindbladChannel(sigma_minus(), 1.0, "T1")
    with pytest.raises(NumericalError, match="Lindblad step failure"):
        evolve_lindblad(zero_operator(sp), [ch], ket([2], 1).dm(), [0, 50.0], max_step=10.0)


def test_dephasing_rates():
    p = DeviceParams(T_b=1.0)
    r = dephasing_rates(p)
    assert r.T2_from_Tb == pytest.approx(ghz(5) * 1.0, rel=1e-12)
    assert 10 <= r.T2_from_Tb <= 100
    assert r.T2star_from_field == pytest.approx(10.0, rel=1e-3)
    r0 = dephasing_rates(p.with_(n_bar=0.0), g=G, delta=ghz(5))
    assert r0.gamma_phi_readout == 0.0
    r1 = dephasing_rates(p.with_(n_bar=1.0), g=G, delta=ghz(5))
    r2 = dephasing_rates(p.with_(n_bar=2.0), g=G, delta=ghz(5))
    assert r2.gamma_phi_readout == pytest.approx(2 * r1.gamma_phi_readout)


def test_trajectory_csv():
    h = build_jc(G, 2)
    res = evolve_unitary(h, ket([2, 3], 1, 0), [0.0, 1.0])
    buf = io.StringIO()
    write_trajectory_csv(res, {"sz": embed(sigma_z(), 0, h.space)}, buf, header=["seed: 0"])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# seed: 0"
    assert lines[1] == "t_ns,observable_name,value_re,value_im"
    assert len(lines) == 4
    assert lines[2].startswith("0.0,sz,1.0,")
