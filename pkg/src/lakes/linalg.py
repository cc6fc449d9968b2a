"""Basis-tagged states and operators, eigensolvers, and unitary propagation.

All quantum models in the package express their Hamiltonians as
:class:`SparseOperator` on a registered :class:`Basis` and evolve
:class:`StateVector` objects with :func:`evolve`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from lakes.errors import (
    BasisMismatch,
    DimensionTooLarge,
    NoConvergence,
    NonHermitian,
    NormDrift,
)

DENSE_THRESHOLD = 4096
HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class Basis:
    """Opaque handle naming a Hilbert-space basis of a fixed dimension."""

    label: str
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"basis dimension must be positive, got {self.dim}")


@dataclass
class StateVector:
    """Normalized complex amplitude vector on a registered basis."""

    amplitudes: np.ndarray
    basis: Basis

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).ravel()
        if self.amplitudes.size != self.basis.dim:
            raise BasisMismatch(
                f"vector of length {self.amplitudes.size} on basis "
                f"{self.basis.label!r} of dimension {self.basis.dim}"
            )

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def n_d(self) -> float:
        """Effective qubit count, log2 of the basis dimension."""
        return float(np.log2(self.basis.dim))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "StateVector":
        n = self.norm
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / n, self.basis)

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy(), self.basis)

    def inner(self, other: "StateVector") -> complex:
        if self.basis != other.basis:
            raise BasisMismatch(f"{self.basis.label!r} vs {other.basis.label!r}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


class SparseOperator:
    """Sparse (or small dense) operator tagged with a basis.

    The matrix is stored as CSR; dense inputs are converted.  The
    ``hermitian`` flag is verified at construction to ``1e-12`` in
    max-entrywise deviation.
    """

    def __init__(self, matrix, basis: Basis, hermitian: bool = True, check: bool = True):
        if sp.issparse(matrix):
            mat = matrix.tocsr()
        else:
            mat = sp.csr_matrix(np.asarray(matrix, dtype=complex))
        if mat.shape != (basis.dim, basis.dim):
            raise BasisMismatch(
                f"matrix shape {mat.shape} on basis {basis.label!r} of dim {basis.dim}"
            )
        if mat.dtype != complex:
            mat = mat.astype(complex)
        self.matrix = mat
        self.basis = basis
        self.hermitian = bool(hermitian)
        if check and self.hermitian:
            dev = self.hermiticity_deviation()
            if dev > HERMITICITY_TOL:
                raise NonHermitian(f"max |A - A^+| = {dev:.3e} exceeds {HERMITICITY_TOL}")

    @property
    def dim(self) -> int:
        return self.basis.dim

    def hermiticity_deviation(self) -> float:
        diff = self.matrix - self.matrix.conj().T
        if diff.nnz == 0:
            return 0.0
        return float(np.abs(diff.data).max())

    def matvec(self, vec):
        if isinstance(vec, StateVector):
            if vec.basis != self.basis:
                raise BasisMismatch(f"{self.basis.label!r} vs {vec.basis.label!r}")
            return StateVector(self.matrix @ vec.amplitudes, self.basis)
        return self.matrix @ np.asarray(vec)

    def expectation(self, psi: StateVector) -> complex:
        if psi.basis != self.basis:
            raise BasisMismatch(f"{self.basis.label!r} vs {psi.basis.label!r}")
        return complex(np.vdot(psi.amplitudes, self.matrix @ psi.amplitudes))

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def commutator(self, other: "SparseOperator") -> "SparseOperator":
        """[self, other]; generally not hermitian."""
        if self.basis != other.basis:
            raise BasisMismatch(f"{self.basis.label!r} vs {other.basis.label!r}")
        mat = self.matrix @ other.matrix - other.matrix @ self.matrix
        return SparseOperator(mat, self.basis, hermitian=False, check=False)

    def frobenius_inner(self, other: "SparseOperator") -> complex:
        """Tr[self^+ other]."""
        if self.basis != other.basis:
            raise BasisMismatch(f"{self.basis.label!r} vs {other.basis.label!r}")
        prod = self.matrix.conj().multiply(other.matrix)
        return complex(prod.sum())

    def __add__(self, other):
        if not isinstance(other, SparseOperator):
            return NotImplemented
        if self.basis != other.basis:
            raise BasisMismatch(f"{self.basis.label!r} vs {other.basis.label!r}")
        return SparseOperator(
            self.matrix + other.matrix,
            self.basis,
            hermitian=self.hermitian and other.hermitian,
            check=False,
        )

    def __sub__(self, other):
        if not isinstance(other, SparseOperator):
            return NotImplemented
        return self + (other * -1.0)

    def __mul__(self, scalar):
        scalar = complex(scalar)
        herm = self.hermitian and scalar.imag == 0.0
        return SparseOperator(self.matrix * scalar, self.basis, hermitian=herm, check=False)

    __rmul__ = __mul__


@dataclass(frozen=True)
class SweepSchedule:
    """Linear parameter ramp param(t) over a total time T > 0."""

    param_start: float
    param_end: float
    total_time: float
    shape: str = "linear"

    def __post_init__(self):
        if self.total_time <= 0:
            raise ValueError(f"total_time must be positive, got {self.total_time}")
        if self.shape != "linear":
            raise ValueError(f"unsupported schedule shape {self.shape!r}")

    def param(self, t: float) -> float:
        frac = min(max(t / self.total_time, 0.0), 1.0)
        return self.param_start + (self.param_end - self.param_start) * frac

    def rate(self, t: float) -> float:
        """d(param)/dt; constant for a linear ramp."""
        return (self.param_end - self.param_start) / self.total_time


def eigendecompose(H: SparseOperator, dense_threshold: int = DENSE_THRESHOLD):
    """Full dense eigendecomposition of a hermitian operator.

    Returns eigenvalues ascending and eigenvectors as StateVector list.
    Degenerate-level ordering is tie-broken by the index of the
    largest-magnitude amplitude so results are deterministic.
    """
    if not H.hermitian:
        raise NonHermitian("eigendecompose requires hermitian_flag")
    if H.dim > dense_threshold:
        raise DimensionTooLarge(
            f"dim {H.dim} exceeds dense threshold {dense_threshold}; "
            "use ground_state for extremal pairs"
        )
    evals, evecs = np.linalg.eigh(H.dense())
    order = _stable_order(evals, evecs)
    evals = evals[order]
    evecs = evecs[:, order]
    states = [StateVector(evecs[:, k], H.basis) for k in range(H.dim)]
    return evals, states


def _stable_order(evals, evecs, tol=1e-12):
    """Sort ascending; within numerically degenerate clusters sort by the
    index of the largest-magnitude amplitude."""
    idx = np.argsort(evals, kind="stable")
    evals = evals[idx]
    keys = []
    for k in range(len(evals)):
        col = evecs[:, idx[k]]
        keys.append(int(np.argmax(np.abs(col))))
    # argsort is stable; refine the order only inside degenerate runs
    final = list(range(len(evals)))
    start = 0
    while start < len(evals):
        stop = start + 1
        while stop < len(evals) and abs(evals[stop] - evals[start]) <= tol * max(1.0, abs(evals[start])):
            stop += 1
        if stop - start > 1:
            final[start:stop] = sorted(final[start:stop], key=lambda k: keys[k])
        start = stop
    return idx[np.asarray(final)]


def ground_state(H: SparseOperator, tol: float = 1e-10, maxiter: int = 20000):
    """Lowest eigenpair of a hermitian operator.

    Small problems go through the dense path; larger ones use implicitly
    restarted Lanczos.  The residual ||H psi - E psi|| is verified to 1e-8.
    """
    if not H.hermitian:
        raise NonHermitian("ground_state requires hermitian_flag")
    if H.dim <= 64:
        evals, states = eigendecompose(H)
        return float(evals[0]), states[0]
    try:
        evals, evecs = spla.eigsh(H.matrix, k=1, which="SA", tol=tol, maxiter=maxiter)
    except spla.ArpackNoConvergence as exc:
        raise NoConvergence("Lanczos ground-state solve did not converge") from exc
    e0 = float(evals[0])
    v0 = evecs[:, 0].astype(complex)
    v0 /= np.linalg.norm(v0)
    residual = float(np.linalg.norm(H.matrix @ v0 - e0 * v0))
    if residual > 1e-8:
        raise NoConvergence(
            f"ground-state residual {residual:.2e} above 1e-8", residual=residual
        )
    return e0, StateVector(v0, H.basis)


def expm_action(matrix, v: np.ndarray, prefactor: complex, m_max: int = 90, tol: float = 1e-12):
    """Compute exp(prefactor * A) @ v for hermitian A via Lanczos.

    ``matrix`` is a scipy sparse matrix, ndarray, or LinearOperator.  For
    tiny systems the dense exponential is used directly.
    """
    n = v.shape[0]
    if n <= 24 and not isinstance(matrix, spla.LinearOperator):
        dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
        return scipy.linalg.expm(prefactor * dense) @ v
    beta = np.linalg.norm(v)
    if beta == 0.0:
        return v.copy()
    m_max = min(m_max, n)
    V = np.empty((m_max + 1, n), dtype=complex)
    alpha = np.empty(m_max)
    off = np.empty(m_max)
    V[0] = v / beta
    w_prev = np.zeros(n, dtype=complex)
    b_prev = 0.0
    result = None
    prev_phi = None
    for m in range(m_max):
        w = matrix @ V[m]
        a = np.vdot(V[m], w).real
        alpha[m] = a
        w = w - a * V[m] - b_prev * w_prev
        # full reorthogonalization keeps long Krylov recurrences stable
        coeffs = V[: m + 1].conj() @ w
        w -= coeffs @ V[: m + 1]
        b = np.linalg.norm(w)
        off[m] = b
        T = np.diag(alpha[: m + 1]) + np.diag(off[:m], 1) + np.diag(off[:m], -1)
        if (m + 1) % 4 == 0 or b < 1e-14 or m == m_max - 1:
            phi = scipy.linalg.expm(prefactor * T)[:, 0]
            if prev_phi is not None:
                err = np.linalg.norm(phi[: len(prev_phi)] - prev_phi) + np.linalg.norm(
                    phi[len(prev_phi):]
                )
                if err < tol:
                    result = beta * (phi @ V[: m + 1])
                    break
            prev_phi = phi
            if b < 1e-14:
                result = beta * (phi @ V[: m + 1])
                break
        if b < 1e-14:
            continue
        w_prev = V[m]
        b_prev = b
        V[m + 1] = w / b
    if result is None:
        phi = scipy.linalg.expm(prefactor * T)[:, 0]
        result = beta * (phi @ V[: m + 1])
    return result


def evolve(
    H_of_t,
    psi0: StateVector,
    schedule: SweepSchedule,
    dt: float | None = None,
    norm_tol: float = 1e-6,
    krylov_m: int = 90,
) -> StateVector:
    """Propagate the Schroedinger equation with a midpoint exponential step.

    ``H_of_t(t)`` must return a SparseOperator (or raw matrix) on the
    state's basis at time t.  Each step applies the exact exponential of
    the midpoint Hamiltonian, so unitarity is preserved per step up to the
    Krylov tolerance.
    """
    if dt is None:
        dt = 0.005 * min(1.0, schedule.total_time)
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    T = schedule.total_time
    n_steps = max(1, int(np.ceil(T / dt - 1e-12)))
    step = T / n_steps
    psi = np.array(psi0.amplitudes, dtype=complex)
    basis = psi0.basis
    for k in range(n_steps):
        t_mid = (k + 0.5) * step
        H = H_of_t(t_mid)
        if isinstance(H, SparseOperator):
            if H.basis != basis:
                raise BasisMismatch(f"{H.basis.label!r} vs {basis.label!r}")
            mat = H.matrix
        else:
            mat = H
        psi = expm_action(mat, psi, -1j * step, m_max=krylov_m)
        nrm = np.linalg.norm(psi)
        if abs(nrm - 1.0) > norm_tol:
            raise NormDrift(
                f"norm drifted to {nrm:.12f} at step {k + 1}/{n_steps}; reduce dt"
            )
    return StateVector(psi, basis)


def overlap_per_site(psi: StateVector, phi: StateVector) -> float:
    """|<psi|phi>|^(1/n_d) with n_d = log2(dim)."""
    if psi.basis != phi.basis:
        raise BasisMismatch(f"{psi.basis.label!r} vs {phi.basis.label!r}")
    n_d = psi.n_d
    if n_d <= 0:
        raise ValueError("overlap_per_site needs basis dimension > 1")
    ov = abs(psi.inner(phi))
    return float(ov ** (1.0 / n_d))


# ---------------------------------------------------------------------------
# JSON serialization: complex entries are stored as [re, im] pairs.


def state_to_json(psi: StateVector) -> str:
    payload = {
        "basis": {"label": psi.basis.label, "dim": psi.basis.dim},
        "amplitudes": [[z.real, z.imag] for z in psi.amplitudes],
    }
    return json.dumps(payload)


def state_from_json(text: str) -> StateVector:
    payload = json.loads(text)
    basis = Basis(payload["basis"]["label"], int(payload["basis"]["dim"]))
    amps = np.array([complex(re, im) for re, im in payload["amplitudes"]])
    return StateVector(amps, basis)


def operator_to_json(op: SparseOperator) -> str:
    coo = op.matrix.tocoo()
    payload = {
        "basis": {"label": op.basis.label, "dim": op.basis.dim},
        "hermitian": op.hermitian,
        "entries": [
            [int(i), int(j), [float(v.real), float(v.imag)]]
            for i, j, v in zip(coo.row, coo.col, coo.data)
        ],
    }
    return json.dumps(payload)


def operator_from_json(text: str) -> SparseOperator:
    payload = json.loads(text)
    basis = Basis(payload["basis"]["label"], int(payload["basis"]["dim"]))
    rows, cols, vals = [], [], []
    for i, j, (re, im) in payload["entries"]:
        rows.append(i)
        cols.append(j)
        vals.append(complex(re, im))
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim)).tocsr()
    return SparseOperator(mat, basis, hermitian=bool(payload["hermitian"]))
