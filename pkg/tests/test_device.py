import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddmqc.device import (
    TWO_ELECTRON_BASIS, DeviceParams, build_reduced_hamiltonian, build_two_electron_hamiltonian,
    capacitance_for_frequency, coupling_strength, derive, ghz, mixing_angle, qubit_basis,
    qubit_splitting, resonator_frequency, validate_device, zeeman_splitting,
)

TWO_PI = 2 * math.pi


def test_qubit_splitting_examples():
    assert qubit_splitting(0.0, 1.7) == pytest.approx(3.4)
    assert qubit_splitting(2.2, 0.0) == pytest.approx(2.2)
    assert qubit_splitting(TWO_PI * 3, TWO_PI * 2) == pytest.approx(TWO_PI * 5)


def test_mixing_angle_examples():
    assert mixing_angle(0.0, 1.0) == pytest.approx(math.pi / 4)
    assert mixing_angle(1.0, 0.0) == 0.0
    assert mixing_angle(2.0, 1.0) == pytest.approx(math.pi / 8)


@given(st.floats(0.01, 10), st.lists(st.floats(0, 100), min_size=2, max_size=10))
def test_mixing_angle_monotone_decreasing(T, deltas):
    ds = sorted(deltas)
    th = [mixing_angle(d, T) for d in ds]
    assert all(a >= b for a, b in zip(th, th[1:]))
    assert all(0 <= x <= math.pi / 4 for x in th)


def test_resonator_frequency_round_trip():
    L, Z0 = 0.03, 50.0
    w0 = TWO_PI * 10.0
    C0 = math.pi / (L * Z0 * w0 * 1e9)
    assert C0 == pytest.approx(3.3333e-11, rel=1e-4)
    assert capacitance_for_frequency(w0, L, Z0) == pytest.approx(C0, rel=1e-15)
    assert resonator_frequency(L, Z0, C0) == pytest.approx(w0, rel=1e-12)
    assert resonator_frequency(2 * L, Z0, C0) == pytest.approx(w0 / 2, rel=1e-12)
    assert resonator_frequency(1e12, Z0, C0) < 1e-10


def test_coupling_strength_order_of_magnitude():
    g = coupling_strength(DeviceParams())
    paper = TWO_PI * 0.125
    assert paper / 10 <= g <= paper * 10
    # literal SI evaluation, independent arithmetic
    e, hbar = 1.602176634e-19, 1.054571817e-34
    C0 = math.pi / (0.03 * 50 * TWO_PI * 10e9)
    g_si = e / (2 * hbar) * 2.0 / (0.03 * C0) * math.sqrt(math.pi * hbar / 50)
    assert g == pytest.approx(g_si * 1e-9, rel=1e-9)


def test_coupling_strength_switch_off_and_linearity():
    p = DeviceParams()
    assert coupling_strength(p.with_(T=0.0)) == 0.0
    assert coupling_strength(p.with_(C_c=p.C_c / 2)) == pytest.approx(coupling_strength(p) / 2)


def test_coupling_maximal_at_optimal_point():
    p = DeviceParams()
    grid = np.linspace(0, 10 * p.T, 401)
    gs = [coupling_strength(p.with_(Delta=d)) for d in grid]
    assert int(np.argmax(gs)) == 0


def test_reduced_hamiltonian_optimal_point_eigenvectors():
    T = 1.3
    h = build_reduced_hamiltonian(0.0, T).matrix
    basis = qubit_basis()
    zero, one = basis[:, 0], basis[:, 1]
    assert np.allclose(h @ zero, -T * zero, atol=1e-14)
    assert np.allclose(h @ one, T * one, atol=1e-14)


def test_reduced_hamiltonian_gap():
    h = build_reduced_hamiltonian(TWO_PI * 3, TWO_PI * 2).matrix
    w = np.linalg.eigvals(h).real
    assert abs(w.max() - w.min() - TWO_PI * 5) < 1e-10
    assert sorted(np.linalg.eigvalsh(build_reduced_hamiltonian(2.0, 0.0).matrix)) == pytest.approx([-2.0, 0.0])


@given(st.floats(0, 50), st.floats(0, 50))
def test_reduced_gap_equals_splitting(Delta, T):
    w = np.linalg.eigvalsh(build_reduced_hamiltonian(Delta, T).matrix)
    assert abs((w[1] - w[0]) - qubit_splitting(Delta, T)) < 1e-10 * max(1.0, Delta, T)


def test_two_electron_hamiltonian_structure():
    p = DeviceParams(Delta=ghz(0.7))
    h = build_two_electron_hamiltonian(p).matrix
    t0, tp, tm = (TWO_ELECTRON_BASIS.index(x) for x in ("T0", "T+", "T-"))
    for t in (t0, tp, tm):
        off = np.delete(h[t], t)
        assert np.all(off == 0)
    # block extraction reproduces the reduced singlet Hamiltonian
    assert np.array_equal(h[:2, :2], build_reduced_hamiltonian(p.Delta, p.T).matrix)
    ez = zeeman_splitting(p)
    assert h[tp, tp] == pytest.approx(ez) and h[tm, tm] == pytest.approx(-ez) and h[t0, t0] == 0


def test_zeeman_splitting_value():
    ez = zeeman_splitting(DeviceParams(B_z=100.0, g_factor=-0.44))
    assert ez == pytest.approx(TWO_PI * 0.44 * 13.996 * 0.1, rel=1e-4)
    assert zeeman_splitting(DeviceParams(g_factor=-0.88)) == pytest.approx(2 * ez)


def test_validate_device_examples():
    p = DeviceParams(T2=100.0)
    rep = validate_device(p, g=TWO_PI * 0.125)
    strong = next(c for c in rep.checks if c.name == "strong_coupling")
    assert strong.passed and "78.5" in strong.detail
    rep0 = validate_device(p, g=0.0)
    assert not next(c for c in rep0.checks if c.name == "strong_coupling").passed
    g = TWO_PI * 0.125
    rep_d = validate_device(p, g=g, detuning=g, dispersive=True)
    assert not next(c for c in rep_d.checks if c.name == "dispersive_regime").passed
    rep_f = validate_device(p, top_fock_population=1e-3)
    assert not next(c for c in rep_f.checks if c.name == "fock_truncation").passed


def test_default_device_derived_values():
    dq = derive(DeviceParams())
    assert dq.omega == pytest.approx(TWO_PI * 5)
    assert dq.omega0 == pytest.approx(TWO_PI * 10)
    assert dq.kappa == pytest.approx(TWO_PI * 1e-3)
    assert dq.T_eff == pytest.approx(dq.omega / 2)
    assert dq.theta == pytest.approx(math.pi / 4)


def test_invalid_params():
    with pytest.raises(ValueError):
        DeviceParams(L=-1.0)
    with pytest.raises(ValueError):
        DeviceParams(T=-1.0)
