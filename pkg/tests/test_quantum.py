import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddmqc.errors import DimensionError, NotHermitianError, NotUnitaryError
from ddmqc.quantum import (
    HilbertSpace, Operator, State, average_gate_fidelity, destroy, embed, identity, ket,
    kraus_average_fidelity, matrix_exponential, partial_trace, pure, sigma_minus, sigma_plus,
    sigma_x, sigma_z, state_fidelity, superop_average_fidelity, tensor, unitary_superop,
)


def brute_kron(a, b):
    # independent Kronecker product by explicit index arithmetic
    ra, ca = a.shape
    rb, cb = b.shape
    out = np.zeros((ra * rb, ca * cb), dtype=complex)
    for i in range(ra):
        for j in range(ca):
            for k in range(rb):
                for l in range(cb):
                    out[i * rb + k, j * cb + l] = a[i, j] * b[k, l]
    return out


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def random_density(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


# --- tensor ---------------------------------------------------------------

def test_tensor_identity():
    out = tensor(identity(2), identity(3))
    assert out.space.dims == (2, 3)
    assert np.array_equal(out.matrix, np.eye(6))


def test_tensor_sigma_z_eigenvalue():
    op = tensor(sigma_z(), identity(2))
    psi = ket([2, 2], 1, 0)
    assert np.allclose(op.matrix @ psi.data, psi.data)


def test_tensor_sigma_plus_annihilation_matches_brute_force():
    a = destroy(3)
    op = tensor(sigma_plus(), a)
    expected = brute_kron(sigma_plus().matrix, a.matrix)
    assert np.array_equal(op.matrix, expected)
    out = op.matrix @ ket([2, 3], 0, 1).data
    assert np.allclose(out, ket([2, 3], 1, 0).data)


# --- embed ----------------------------------------------------------------

def test_embed_first_subsystem():
    assert np.array_equal(embed(sigma_z(), 0, [2, 2]).matrix, np.kron(sigma_z().matrix, np.eye(2)))


def test_embed_disjoint_supports_commute():
    sp = HilbertSpace((2, 2, 3))
    a = embed(destroy(3), 2, sp).matrix
    x = embed(sigma_x(), 0, sp).matrix
    assert np.max(np.abs(a @ x - x @ a)) == 0


def test_embed_sigma_plus_second_qubit():
    op = embed(sigma_plus(), 1, [2, 2])
    assert np.array_equal(op.matrix, brute_kron(np.eye(2), sigma_plus().matrix))
    assert np.allclose(op.matrix @ ket([2, 2], 0, 0).data, ket([2, 2], 0, 1).data)


def test_embed_dimension_mismatch():
    with pytest.raises(DimensionError):
        embed(destroy(3), 0, [2, 2])


@given(st.lists(st.integers(1, 3), min_size=1, max_size=4), st.data())
@settings(max_examples=40, deadline=None)
def test_embed_equals_repeated_tensor(dims, data):
    target = data.draw(st.integers(0, len(dims) - 1))
    rng = np.random.default_rng(len(dims) * 7 + target)
    n = dims[target]
    op = Operator(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)), HilbertSpace((n,)))
    factors = [identity(d) for d in dims]
    factors[target] = op
    assert np.array_equal(embed(op, target, dims).matrix, tensor(*factors).matrix)


# --- matrix exponential ---------------------------------------------------

def test_expm_zero_is_identity():
    u = matrix_exponential(Operator.from_matrix(np.zeros((3, 3))), 2.5)
    assert np.allclose(u.matrix, np.eye(3), atol=1e-15)


def test_expm_pauli_rotation():
    u = matrix_exponential(sigma_x(), np.pi / 2)
    assert np.allclose(u.matrix, -1j * sigma_x().matrix, atol=1e-14)


def test_expm_matches_eigendecomposition_oracle():
    from scipy.linalg import expm

    rng = np.random.default_rng(3)
    h = random_hermitian(rng, 8)
    t = 0.73
    w, v = np.linalg.eig(h)  # general solver, independent of eigh path
    oracle = v @ np.diag(np.exp(-1j * w * t)) @ np.linalg.inv(v)
    u = matrix_exponential(Operator.from_matrix(h), t).matrix
    assert np.max(np.abs(u - oracle)) < 1e-10
    assert np.max(np.abs(u - expm(-1j * h * t))) < 1e-10


def test_expm_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        matrix_exponential(Operator.from_matrix([[0, 1], [0, 0]]), 1.0)


@given(st.integers(1, 16), st.floats(-50, 50), st.integers(0, 10_000))
@settings(max_examples=50, deadline=None)
def test_expm_unitarity(n, t, seed):
    h = random_hermitian(np.random.default_rng(seed), n) * 10
    u = matrix_exponential(Operator.from_matrix(h), t)
    assert u.unitarity_error() < 1e-10


# --- partial trace --------------------------------------------------------

def test_partial_trace_product_state_is_pure():
    psi = np.kron([0.6, 0.8j], [1 / np.sqrt(2), 0, 1 / np.sqrt(2)])
    red = partial_trace(pure(psi, (2, 3)).dm(), [0])
    assert np.allclose(red.data, np.outer([0.6, 0.8j], np.conj([0.6, 0.8j])))
    assert np.isclose(np.trace(red.data @ red.data).real, 1.0)


def test_partial_trace_bell_pair():
    bell = pure(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2))
    assert np.allclose(partial_trace(bell, [1]).data, np.eye(2) / 2)


def test_partial_trace_matches_index_sum():
    rng = np.random.default_rng(11)
    rho = random_density(rng, 6)
    st_ = State(rho, HilbertSpace((2, 3)))
    oracle_a = np.zeros((2, 2), complex)
    oracle_b = np.zeros((3, 3), complex)
    for i in range(2):
        for j in range(2):
            oracle_a[i, j] = sum(rho[i * 3 + k, j * 3 + k] for k in range(3))
    for k in range(3):
        for l in range(3):
            oracle_b[k, l] = sum(rho[i * 3 + k, i * 3 + l] for i in range(2))
    ra = partial_trace(st_, [0]).data
    rb = partial_trace(st_, [1]).data
    assert np.max(np.abs(ra - oracle_a)) < 1e-14
    assert np.max(np.abs(rb - oracle_b)) < 1e-14
    assert abs(np.trace(ra) - 1) < 1e-12 and abs(np.trace(rb) - 1) < 1e-12


def test_partial_trace_bad_index():
    with pytest.raises(DimensionError):
        partial_trace(ket([2, 2], 0, 0), [2])


@given(st.lists(st.integers(1, 3), min_size=2, max_size=3), st.integers(0, 1000))
@settings(max_examples=40, deadline=None)
def test_partial_trace_preserves_trace_and_positivity(dims, seed):
    rng = np.random.default_rng(seed)
    n = int(np.prod(dims))
    rho = State(random_density(rng, n), HilbertSpace(tuple(dims)))
    keep = [i for i in range(len(dims)) if rng.random() < 0.5] or [0]
    red = partial_trace(rho, keep)
    assert abs(np.trace(red.data) - 1) < 1e-12
    assert np.linalg.eigvalsh(red.data).min() >= -1e-9


# --- fidelities -----------------------------------------------------------

def test_state_fidelity_examples():
    zero, one = ket([2], 0), ket([2], 1)
    plus = pure(np.array([1, 1]) / np.sqrt(2))
    assert state_fidelity(zero, zero) == pytest.approx(1.0)
    assert state_fidelity(zero, one) == 0.0
    assert state_fidelity(zero, plus) == pytest.approx(0.5)
    assert state_fidelity(zero, plus.dm()) == pytest.approx(0.5)


def test_state_fidelity_space_mismatch():
    with pytest.raises(DimensionError):
        state_fidelity(ket([2], 0), ket([3], 0))


def test_average_gate_fidelity_examples():
    x = sigma_x().matrix
    assert average_gate_fidelity(x, x) == pytest.approx(1.0)
    assert average_gate_fidelity(np.eye(2), x) == pytest.approx(1 / 3)
    phi = np.pi / 2
    rz = np.diag(np.exp([1j * phi / 2, -1j * phi / 2]))
    # direct trace oracle: |Tr rz|^2 = 4 cos^2(phi/2)
    tr = np.trace(rz)
    assert average_gate_fidelity(np.eye(2), rz) == pytest.approx((abs(tr) ** 2 + 2) / 6)
    assert average_gate_fidelity(np.eye(2), rz) == pytest.approx(2 / 3)


def test_average_gate_fidelity_rejects_non_unitary():
    with pytest.raises(NotUnitaryError):
        average_gate_fidelity(np.eye(2), np.diag([1, 0.5]))


@given(st.integers(0, 1000), st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi))
@settings(max_examples=40, deadline=None)
def test_average_gate_fidelity_global_phase_invariance(seed, a, b):
    rng = np.random.default_rng(seed)
    u1 = matrix_exponential(Operator.from_matrix(random_hermitian(rng, 4)), 1.0).matrix
    u2 = matrix_exponential(Operator.from_matrix(random_hermitian(rng, 4)), 1.0).matrix
    f = average_gate_fidelity(u1, u2)
    assert abs(average_gate_fidelity(np.exp(1j * a) * u1, np.exp(1j * b) * u2) - f) < 1e-12
    assert 1 / 5 - 1e-12 <= f <= 1 + 1e-12


def test_channel_fidelities_reduce_to_unitary_formula():
    rng = np.random.default_rng(5)
    u1 = matrix_exponential(Operator.from_matrix(random_hermitian(rng, 4)), 0.3).matrix
    u2 = matrix_exponential(Operator.from_matrix(random_hermitian(rng, 4)), 0.3).matrix
    f = average_gate_fidelity(u1, u2)
    assert kraus_average_fidelity([u1], u2) == pytest.approx(f, abs=1e-12)
    assert superop_average_fidelity(unitary_superop(u1), u2) == pytest.approx(f, abs=1e-12)


def test_state_validation():
    with pytest.raises(Exception):
        pure([1, 1]).validate()
    pure(np.array([1, 1]) / np.sqrt(2)).validate()
