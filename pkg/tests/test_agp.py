import numpy as np
import pytest

from lakes.agp import (exact_agp, gapped_agp, nested_commutator_terms,
                       optimize_coefficients, state_specific_agp)
from lakes.errors import DegenerateSpectrum, IndexOutOfRange
from lakes.linalg import Basis, SparseOperator


@pytest.fixture
def two_level():
    basis = Basis("qubit", 2)
    sx = SparseOperator(np.array([[0, 1], [1, 0]], dtype=complex), basis)
    sz = SparseOperator(np.array([[1, 0], [0, -1]], dtype=complex), basis)
    return basis, sx, sz


def test_exact_agp_landau_zener(two_level):
    # H = K Z + h X sweeping K: A = -h/(2(K^2+h^2)) Y, standard two-level result
    basis, sx, sz = two_level
    K, h = 0.7, 1.3
    H = SparseOperator(K * sz.dense() + h * sx.dense(), basis)
    A = exact_agp(H, sz).dense()
    sy = np.array([[0, -1j], [1j, 0]])
    want = -h / (2 * (K * K + h * h)) * sy
    assert np.allclose(A, want, atol=1e-12)


def test_exact_agp_rejects_degenerate(two_level):
    basis, sx, _ = two_level
    H = SparseOperator(np.zeros((2, 2)), basis)
    with pytest.raises(DegenerateSpectrum):
        exact_agp(H, sx)


def test_gapped_agp_filters_small_gaps(two_level):
    basis, sx, sz = two_level
    H = SparseOperator(0.1 * sz.dense() + 0.05 * sx.dense(), basis)
    assert np.allclose(gapped_agp(H, sz, 10.0).dense(), 0.0)
    full = gapped_agp(H, sz, 0.0).dense()
    assert np.allclose(full, exact_agp(H, sz).dense(), atol=1e-12)


def test_gapped_agp_tolerates_degenerate_levels():
    # two decoupled qubits: doubly degenerate middle levels
    basis = Basis("two-qubit", 4)
    z = np.diag([1.0, -1.0])
    eye = np.eye(2)
    H = SparseOperator(np.kron(z, eye) + np.kron(eye, z), basis)
    dH = SparseOperator(np.kron(np.array([[0, 1], [1, 0]]), eye), basis)
    A = gapped_agp(H, dH, 1e-8)
    assert np.allclose(A.dense().conj().T, A.dense())


def test_state_specific_level_bounds(two_level):
    basis, sx, sz = two_level
    H = SparseOperator(sz.dense() + 0.3 * sx.dense(), basis)
    with pytest.raises(IndexOutOfRange):
        state_specific_agp(H, sz, level=2)


def test_nested_terms_count_and_hermiticity(two_level):
    basis, sx, sz = two_level
    H = SparseOperator(0.4 * sz.dense() + sx.dense(), basis)
    seed = SparseOperator(1j * (H.dense() @ sz.dense() - sz.dense() @ H.dense()), basis)
    terms = nested_commutator_terms(H, seed, order=3)
    assert len(terms) == 3
    for t in terms:
        assert np.allclose(t.dense(), t.dense().conj().T, atol=1e-12)


def test_variational_matches_exact_on_two_level(two_level):
    # the single commutator term spans the exact qubit gauge potential
    basis, sx, sz = two_level
    H = SparseOperator(0.4 * sz.dense() + 1.0 * sx.dense(), basis)
    seed = SparseOperator(1j * (H.dense() @ sz.dense() - sz.dense() @ H.dense()), basis)
    terms = nested_commutator_terms(H, seed, order=1)
    coeffs = optimize_coefficients(terms, H, sz)
    A_var = coeffs[0] * terms[0].dense()
    assert np.allclose(A_var, exact_agp(H, sz).dense(), atol=1e-10)
