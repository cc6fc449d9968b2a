"""Adiabatic gauge potentials: exact, gapped, state-specific, variational.

The exact gauge potential is built from the instantaneous
eigendecomposition; approximate ones minimize the trace action
S = Tr[(dH + i[A, H])^2] over a linear ansatz, which reduces to normal
equations because S is quadratic in the coefficients.
"""

from __future__ import annotations

import numpy as np

from lakes.errors import DegenerateSpectrum, IndexOutOfRange, SingularSystem
from lakes.linalg import SparseOperator, eigendecompose

DEGENERACY_TOL = 1e-10


def _eigenframe(H: SparseOperator):
    evals, states = eigendecompose(H)
    U = np.column_stack([s.amplitudes for s in states])
    return np.asarray(evals), U


def exact_agp(H: SparseOperator, dH: SparseOperator) -> SparseOperator:
    """Exact gauge potential with zero diagonal (gauge choice).

    <m|A|n> = -i <m|dH|n> / (E_m - E_n) for m != n.
    """
    return _filtered_agp(H, dH, lambda gaps: np.ones_like(gaps, dtype=bool),
                         require_nondegenerate=True)


def gapped_agp(H: SparseOperator, dH: SparseOperator, delta: float) -> SparseOperator:
    """Exact gauge potential keeping only transitions with |E_m - E_n| > delta.

    The boundary is strict: transitions exactly at the cutoff are dropped.
    """
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    return _filtered_agp(H, dH, lambda gaps: gaps > delta)


def state_specific_agp(H: SparseOperator, dH: SparseOperator, level: int = 2) -> SparseOperator:
    """Gauge potential keeping only transitions into/out of one eigenlevel."""
    if level < 0 or level >= H.dim:
        raise IndexOutOfRange(f"level {level} outside [0, {H.dim - 1}]")
    evals, U = _eigenframe(H)
    _check_nondegenerate(evals)
    keep = np.zeros((H.dim, H.dim), dtype=bool)
    keep[level, :] = True
    keep[:, level] = True
    return _assemble(evals, U, dH, keep, H)


def _filtered_agp(H, dH, gap_filter, require_nondegenerate=False):
    evals, U = _eigenframe(H)
    if require_nondegenerate:
        _check_nondegenerate(evals)
    gaps = np.abs(evals[:, None] - evals[None, :])
    keep = gap_filter(gaps) & (gaps >= DEGENERACY_TOL)
    return _assemble(evals, U, dH, keep, H)


def _check_nondegenerate(evals):
    gaps = np.diff(evals)
    if len(gaps) and gaps.min() < DEGENERACY_TOL:
        raise DegenerateSpectrum(
            f"consecutive gap {gaps.min():.3e} below {DEGENERACY_TOL}"
        )


def _assemble(evals, U, dH, keep, H):
    dH_eig = U.conj().T @ dH.dense() @ U
    keep = keep.copy()
    np.fill_diagonal(keep, False)
    denom = evals[:, None] - evals[None, :]
    denom[~keep] = 1.0  # dropped transitions may sit at zero gap
    A_eig = -1j * dH_eig / denom
    A_eig[~keep] = 0.0
    A = U @ A_eig @ U.conj().T
    A = 0.5 * (A + A.conj().T)  # remove roundoff asymmetry
    return SparseOperator(A, H.basis, hermitian=True)


def optimize_coefficients(terms, H: SparseOperator, dH: SparseOperator):
    """Minimize Tr[(dH + i[A, H])^2] over A = sum_j c_j * terms[j].

    Returns the coefficient vector; rank-deficient systems fall back to the
    minimum-norm solution and raise SingularSystem only through the returned
    diagnostics (see :func:`optimize_coefficients_full`).
    """
    coeffs, _ = optimize_coefficients_full(terms, H, dH)
    return coeffs


def optimize_coefficients_full(terms, H: SparseOperator, dH: SparseOperator):
    """Normal-equation solve for the trace action; returns (coeffs, info).

    info carries the Gram matrix rank and the achieved action value.
    """
    L = [1j * (t.matrix @ H.matrix - H.matrix @ t.matrix) for t in terms]
    n = len(L)
    M = np.empty((n, n))
    b = np.empty(n)
    dHm = dH.matrix
    for j in range(n):
        for k in range(j, n):
            val = (L[j].conj().multiply(L[k])).sum().real
            M[j, k] = M[k, j] = val
        b[j] = (L[j].conj().multiply(dHm)).sum().real
    coeffs, residuals, rank, _ = np.linalg.lstsq(M, -b, rcond=None)
    action0 = (dHm.conj().multiply(dHm)).sum().real
    action = action0 + 2 * b @ coeffs + coeffs @ M @ coeffs
    info = {"rank": int(rank), "n_terms": n, "action": float(action), "action_at_zero": float(action0)}
    if rank < n:
        info["singular"] = SingularSystem(
            f"Gram matrix rank {rank} < {n}; minimum-norm coefficients", rank=rank
        )
    return coeffs, info


def nested_commutator_terms(B: SparseOperator, seed: SparseOperator, order: int):
    """Hermitian ansatz terms i*[B,...,[B, seed]] with 2k-2 nestings, k=1..order.

    ``seed`` enters as the anti-hermitian generator (e.g. a PYP sum is
    passed as -i * raising + h.c. so that the terms come out hermitian).
    Here seed is hermitian and every even nesting count keeps it hermitian.
    """
    terms = []
    current = seed
    for k in range(1, order + 1):
        terms.append(current)
        if k < order:
            inner = B.commutator(current)
            current = B.commutator(inner)
            current = SparseOperator(
                0.5 * (current.matrix + current.matrix.conj().T),
                B.basis,
                hermitian=True,
                check=False,
            )
    return terms
