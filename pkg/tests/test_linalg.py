import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from statswitch.errors import ContractViolation, LayoutError, SizeError
from statswitch.linalg import (evolve_exact, is_hermitian, krylov_evolve, kron, kron_all,
                               spectral_decompose)


def random_hermitian(n, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (a + a.conj().T) / 2


def test_kron_first_factor_is_most_significant():
    a = np.diag([1.0, 2.0])
    b = np.diag([1.0, 10.0])
    np.testing.assert_allclose(kron(a, b).diagonal(), [1, 10, 2, 20])


def test_kron_size_cap():
    with pytest.raises(SizeError):
        kron(sp.identity(1000), sp.identity(1000), max_dim=10**5)


def test_kron_all_matches_numpy():
    ops = [random_hermitian(2, s) for s in range(3)]
    expected = np.kron(np.kron(ops[0], ops[1]), ops[2])
    np.testing.assert_allclose(kron_all(ops).toarray(), expected, atol=1e-14)


def test_hermitian_check():
    h = random_hermitian(6)
    assert is_hermitian(h)
    bad = h.copy()
    bad[0, 1] += 1e-6
    assert not is_hermitian(bad)


def test_spectral_decompose_rejects_non_hermitian():
    with pytest.raises(ContractViolation):
        spectral_decompose(np.array([[0, 1], [0, 0]]))


def test_spectrum_reconstructs_operator():
    h = random_hermitian(8, 3)
    np.testing.assert_allclose(spectral_decompose(h).reconstruct(), h, atol=1e-12)


def test_dense_and_krylov_match_expm():
    h = random_hermitian(300, 1, scale=0.2)
    rng = np.random.default_rng(5)
    v = rng.normal(size=300) + 1j * rng.normal(size=300)
    v /= np.linalg.norm(v)
    ref = scipy.linalg.expm(-1j * 2.3 * h) @ v
    np.testing.assert_allclose(evolve_exact(h, 2.3, v, method="dense"), ref, atol=1e-10)
    np.testing.assert_allclose(krylov_evolve(sp.csr_matrix(h), 2.3, v, tol=1e-12), ref, atol=1e-9)


def test_krylov_handles_invariant_subspace():
    h = np.diag([1.0, -1.0, 0.5, 2.0])
    v = np.array([1, 0, 0, 0], dtype=complex)
    np.testing.assert_allclose(krylov_evolve(h, 1.7, v), np.exp(-1.7j) * v, atol=1e-14)


def test_evolve_dimension_mismatch():
    with pytest.raises(LayoutError):
        evolve_exact(np.eye(3), 1.0, np.ones(4))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(-5, 5))
def test_evolution_is_unitary(seed, t):
    h = random_hermitian(12, seed)
    v = np.random.default_rng(seed).normal(size=12).astype(complex)
    w = evolve_exact(h, t, v)
    assert abs(np.linalg.norm(w) - np.linalg.norm(v)) < 1e-12
    np.testing.assert_allclose(evolve_exact(h, -t, w), v, atol=1e-11)
