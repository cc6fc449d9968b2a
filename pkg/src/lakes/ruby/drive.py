"""Variational drive construction and CD sweeps for the ruby-lattice model.

The gauge-potential ansatz is a sum of nested commutators around the PYP
generator.  Two families are supported:

* ``full``: term_k = -(omega/2) [H(d), ..., [H(d), PYP]] with 2k-2 nestings,
  polynomial in the detuning d of degree 2k-2;
* ``restricted``: term_k = [PXP, ..., [PXP, PYP]], detuning-independent
  (exactly the operator content generated by the pulse cycles).

Coefficients alpha_k(d) minimize the trace action Tr[(dH + i[A, H])^2]; the
traces are evaluated on the 2x2 symmetric sector and reused for any lattice
size (the optimum is size-insensitive for these local drives).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from lakes.agp import optimize_coefficients_full
from lakes.errors import TooDeep
from lakes.linalg import SparseOperator, StateVector, SweepSchedule, evolve, ground_state, overlap_per_site
from lakes.ruby.basis import enumerate_blockaded_basis, symmetry_reduce
from lakes.ruby.lattice import build_lattice
from lakes.ruby.operators import build_operators, gauss_projector_apply, rvb_state

MAX_ELL = 6
DELTA_GRID_POINTS = 101


@lru_cache(maxsize=8)
def cached_system(Lx, Ly, rb_factor=1.01, reduced=True):
    """Lattice, blockaded basis, symmetric sector, and operators (memoized)."""
    lat = build_lattice(Lx, Ly, rb_factor)
    basis = enumerate_blockaded_basis(lat)
    sym = symmetry_reduce(basis, lat)
    ops = build_operators(basis, lat, sym=sym if reduced else None)
    return lat, basis, sym, ops


def _nest(B, term, count):
    for _ in range(count):
        term = B @ term - term @ B
    return term


def agp_terms(ops, ell, family="full", delta=None, omega=1.0):
    """Nested-commutator ansatz terms (hermitian SparseOperators), k = 1..ell."""
    if ell < 1:
        raise ValueError(f"ell must be >= 1, got {ell}")
    if ell > MAX_ELL:
        raise TooDeep(f"ell={ell} exceeds the nesting guard at {MAX_ELL}")
    if family == "full":
        if delta is None:
            raise ValueError("the full family needs the detuning value")
        B = ops.hamiltonian(delta, omega).matrix
        seed = -(omega / 2.0) * ops.pyp.matrix
    elif family == "restricted":
        B = ops.pxp.matrix
        seed = ops.pyp.matrix
    else:
        raise ValueError(f"unknown ansatz family {family!r}")

    terms = []
    current = seed
    for k in range(1, ell + 1):
        mat = 0.5 * (current + current.conj().T)    # symmetrize roundoff only
        terms.append(SparseOperator(mat, ops.tag, hermitian=True, check=False))
        if k < ell:
            current = _nest(B, current, 2)
    return terms


def optimize_alphas(terms, H, dH):
    """Trace-action optimum for the given terms; returns (alphas, info)."""
    return optimize_coefficients_full(terms, H, dH)


@dataclass(frozen=True)
class AlphaTable:
    """alpha_k(delta) on a uniform grid with linear interpolation."""

    family: str
    ell: int
    omega: float
    delta_grid: np.ndarray
    values: np.ndarray          # (len(grid), ell)

    def __call__(self, delta):
        return np.array([
            np.interp(delta, self.delta_grid, self.values[:, k])
            for k in range(self.values.shape[1])
        ])


def build_alpha_table(ell, family="full", delta_span=(-5.0, 5.0), omega=1.0,
                      n_points=DELTA_GRID_POINTS, rb_factor=1.01):
    """Calibrate alpha_k(delta) on the 2x2 symmetric sector."""
    _, _, _, ops = cached_system(2, 2, rb_factor)
    grid = np.linspace(delta_span[0] * omega, delta_span[1] * omega, n_points)
    dH = ops.d_delta()
    vals = np.empty((len(grid), ell))
    cached_terms = None
    for i, d in enumerate(grid):
        if family == "restricted":
            if cached_terms is None:
                cached_terms = agp_terms(ops, ell, family, omega=omega)
            terms = cached_terms
        else:
            terms = agp_terms(ops, ell, family, delta=d, omega=omega)
        alphas, _ = optimize_alphas(terms, ops.hamiltonian(d, omega), dH)
        vals[i] = alphas
    return AlphaTable(family=family, ell=ell, omega=omega,
                      delta_grid=grid, values=vals)


class DriveOperator:
    """Assembles A(delta) = sum_k alpha_k(delta) term_k(delta) on a target basis.

    For the full family the term matrices are polynomials in delta of degree
    2k-2; they are fitted once from evaluations at Chebyshev-spaced nodes so
    that assembling the drive at any delta costs only sparse additions.
    """

    def __init__(self, ops, alpha_table, lambda_f=1.0):
        self.ops = ops
        self.table = alpha_table
        self.lambda_f = float(lambda_f)
        self.omega = alpha_table.omega
        ell = alpha_table.ell
        lo, hi = alpha_table.delta_grid[0], alpha_table.delta_grid[-1]
        self.scale = max(abs(lo), abs(hi), 1e-12)
        if alpha_table.family == "restricted":
            terms = agp_terms(ops, ell, "restricted", omega=self.omega)
            self.coeff_mats = [[t.matrix] for t in terms]
        else:
            degree = 2 * ell - 2
            nodes_u = np.cos(np.pi * (np.arange(degree + 1) + 0.5) / (degree + 1)) \
                if degree > 0 else np.array([0.0])
            nodes = nodes_u * self.scale
            evals = [agp_terms(ops, ell, "full", delta=d, omega=self.omega)
                     for d in nodes]
            self.coeff_mats = []
            for k in range(ell):
                dk = 2 * k
                V = np.vander(nodes_u, dk + 1, increasing=True)
                W = np.linalg.pinv(V)           # (dk+1, n_nodes)
                mats = []
                for p in range(dk + 1):
                    m = sum(W[p, j] * evals[j][k].matrix for j in range(len(nodes)))
                    m.data[np.abs(m.data) < 1e-14] = 0.0
                    m.eliminate_zeros()
                    mats.append(m)
                self.coeff_mats.append(mats)

    def term_matrix(self, k, delta):
        u = delta / self.scale
        mats = self.coeff_mats[k]
        out = mats[0].copy()
        for p in range(1, len(mats)):
            out = out + (u ** p) * mats[p]
        return out

    def assemble(self, delta):
        """lambda_f * sum_k alpha_k(delta) term_k(delta) as a sparse matrix."""
        alphas = self.table(delta)
        out = None
        for k, ak in enumerate(alphas):
            piece = ak * self.term_matrix(k, delta)
            out = piece if out is None else out + piece
        return self.lambda_f * out


def cd_sweep(lat_size, ell, family="full", lambda_f=1.0, schedule=None,
             dt=None, omega=1.0, rb_factor=1.01, alpha_table=None,
             total_time=None, delta_span=(-5.0, 5.0)):
    """Sweep the detuning with (optionally) counterdiabatic driving.

    ``ell=0`` runs the plain sweep.  The detuning follows ``schedule`` (built
    from ``delta_span`` and ``total_time`` when not given); the initial state
    is the ground state at the starting detuning on the symmetric sector.
    """
    Lx, Ly = lat_size
    _, _, _, ops = cached_system(Lx, Ly, rb_factor)
    if schedule is None:
        if total_time is None:
            raise ValueError("need either a schedule or total_time")
        schedule = SweepSchedule(delta_span[0] * omega, delta_span[1] * omega,
                                 total_time)

    E0, psi0 = ground_state(ops.hamiltonian(schedule.param_start, omega))

    drive = None
    if ell > 0:
        if alpha_table is None:
            alpha_table = build_alpha_table(
                ell, family,
                delta_span=(schedule.param_start / omega, schedule.param_end / omega),
                omega=omega, rb_factor=rb_factor)
        drive = DriveOperator(ops, alpha_table, lambda_f)

    def H_of_t(t):
        d = schedule.param(t)
        mat = ops.hamiltonian(d, omega).matrix
        if drive is not None:
            mat = mat + schedule.rate(t) * drive.assemble(d)
        return SparseOperator(mat, ops.tag, hermitian=True, check=False)

    psi = evolve(H_of_t, psi0, schedule, dt=dt)
    return sweep_observables(psi, ops, omega=omega, schedule=schedule,
                             initial_state=psi0, E_start=E0)


def sweep_observables(psi, ops, omega=1.0, schedule=None, initial_state=None,
                      E_start=None):
    """Observable bundle reported for every ruby run."""
    rvb = rvb_state(ops)
    out = {
        "state": psi,
        "initial_state": initial_state,
        "rvb_overlap": overlap_per_site(rvb, psi),
        "g_avg": float(ops.g_avg.expectation(psi).real),
        "w_avg": float(ops.w_avg.expectation(psi).real),
        "n_density": float(ops.n_tot.expectation(psi).real) / ops.n_sites,
    }
    try:
        proj = gauss_projector_apply(psi, ops)
        out["w_tilde"] = float(ops.w_avg.expectation(proj).real)
    except Exception:
        out["w_tilde"] = float("nan")
    if schedule is not None:
        Ef, gs = ground_state(ops.hamiltonian(schedule.param_end, omega))
        out["ground_overlap"] = overlap_per_site(gs, psi)
        out["E_final_gs"] = Ef
    if E_start is not None:
        out["E_start_gs"] = E_start
    return out


def lambda_f_tune(lat_size, ell, family="full", total_time=1.0, omega=1.0,
                  bounds=(1.0, 4.0), tol=1e-3, dt=None, alpha_table=None,
                  rb_factor=1.01):
    """Golden-section maximization of final RVB overlap over the drive scale."""
    if alpha_table is None:
        alpha_table = build_alpha_table(ell, family, omega=omega,
                                        rb_factor=rb_factor)

    def f(lam):
        res = cd_sweep(lat_size, ell, family, lambda_f=lam, omega=omega,
                       total_time=total_time, dt=dt, alpha_table=alpha_table,
                       rb_factor=rb_factor)
        return res["rvb_overlap"]

    inv = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = bounds
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def sweep_library(lat_size, T_values, omega=1.0, dt=None, rb_factor=1.01,
                  delta_span=(-5.0, 5.0)):
    """Undriven final states over a T grid, for matching pulse-prepared states."""
    out = []
    for T in T_values:
        res = cd_sweep(lat_size, ell=0, omega=omega, total_time=float(T),
                       dt=dt, rb_factor=rb_factor, delta_span=delta_span)
        out.append((float(T), res["state"]))
    return out
