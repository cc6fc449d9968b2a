"""Operators on the blockaded ruby-lattice basis.

All operators act on bitmask configurations.  ``PXP`` / ``PYP`` flip a single
atom only when the flipped configuration remains blockaded.  ``G_v`` is
diagonal with eigenvalue (-1)^(excited links at vertex v).  ``W_p`` permutes
the three atoms of each of the six triangles around hexagon p
(empty <-> hexagon-edge atom, left <-> right outer atom) and projects back to
the blockaded space; on the dimer subspace (all G_v = -1) it is the usual
Wilson loop and squares to the identity.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from lakes.errors import NoCoverings, ZeroProjection
from lakes.linalg import Basis, SparseOperator, StateVector


def _flip_table(basis):
    """Per-site single-flip connectivity: (rows, cols, occupied) index arrays."""
    configs = basis.configs
    out = []
    for i in range(basis.n_sites):
        flipped = configs ^ (np.uint64(1) << np.uint64(i))
        idx = basis.lookup(flipped)
        valid = idx >= 0
        rows = idx[valid]
        cols = np.nonzero(valid)[0]
        occ = ((configs[valid] >> np.uint64(i)) & np.uint64(1)).astype(bool)
        out.append((rows, cols, occ))
    return out


def _vertex_parity(basis, vertex):
    occ = basis.occupation()
    return occ[:, list(vertex)].sum(axis=1) % 2


def _plaquette_permutation(basis, plaquette):
    """Images of all configs under the triangle permutation of one hexagon."""
    c = basis.configs.copy()
    new = c.copy()
    for e, l, r in plaquette:
        me, ml, mr = (np.uint64(1) << np.uint64(s) for s in (e, l, r))
        be = (c & me) != 0
        bl = (c & ml) != 0
        br = (c & mr) != 0
        new &= ~(me | ml | mr)
        add = np.where(be, np.uint64(0),
                       np.where(bl, mr, np.where(br, ml, me)))
        new |= add
    return new


@dataclass(frozen=True)
class RubyOperators:
    """PXP-model operator set on the full blockaded basis (or a reduced sector)."""

    tag: Basis
    pxp: SparseOperator
    pyp: SparseOperator
    n_tot: SparseOperator
    g_ops: tuple              # per-vertex G_v (empty in a reduced sector)
    w_ops: tuple              # per-plaquette W_p (empty in a reduced sector)
    g_avg: SparseOperator     # (1/N_v) sum_v G_v
    w_avg: SparseOperator     # (1/N_p) sum_p W_p
    h_stab: SparseOperator    # sum_v (1+G_v)/2 + sum_p (1-W_p)/2
    gauss_mask: np.ndarray    # bool: configs with G_v = -1 at every vertex
    n_sites: int
    orbit_sizes: np.ndarray = None   # set on a reduced sector (per representative)

    def hamiltonian(self, delta, omega=1.0):
        """H = (omega/2) PXP - delta N_tot."""
        mat = (omega / 2.0) * self.pxp.matrix - delta * self.n_tot.matrix
        return SparseOperator(mat, self.tag, hermitian=True, check=False)

    def d_delta(self):
        """dH/d(delta) = -N_tot."""
        return SparseOperator(-self.n_tot.matrix, self.tag, hermitian=True, check=False)


def build_operators(basis, lat, sym=None):
    """Assemble the PXP-model operators.

    With ``sym`` given, every symmetry-invariant operator is projected into
    the translation+inversion sector; per-vertex and per-plaquette operators
    are only available on the full basis (individual stabilizers are not
    sector-invariant, their lattice averages are).
    """
    dim = basis.dim
    tag = Basis(f"ruby-{lat.Lx}x{lat.Ly}", dim)

    flips = _flip_table(basis)
    x_rows = np.concatenate([f[0] for f in flips])
    x_cols = np.concatenate([f[1] for f in flips])
    pxp_mat = sp.csr_matrix(
        (np.ones(len(x_rows)), (x_rows, x_cols)), shape=(dim, dim))
    # <1|Y|0> = i on the raised config, <0|Y|1> = -i on the lowered one
    y_data = np.concatenate(
        [np.where(f[2], -1j, 1j) for f in flips])
    pyp_mat = sp.csr_matrix((y_data, (x_rows, x_cols)), shape=(dim, dim))

    occ = basis.occupation()
    n_mat = sp.diags(occ.sum(axis=1).astype(float)).tocsr()

    g_mats = []
    gauss_mask = np.ones(dim, dtype=bool)
    for v in lat.vertices:
        parity = _vertex_parity(basis, v)
        g_mats.append(sp.diags(1.0 - 2.0 * parity).tocsr())
        gauss_mask &= parity == 1

    w_mats = []
    for p in lat.plaquettes:
        images = _plaquette_permutation(basis, p)
        idx = basis.lookup(images)
        valid = idx >= 0
        w_mats.append(sp.csr_matrix(
            (np.ones(valid.sum()), (idx[valid], np.nonzero(valid)[0])),
            shape=(dim, dim)))

    g_sum = sum(g_mats[1:], start=g_mats[0])
    w_sum = sum(w_mats[1:], start=w_mats[0])
    eye = sp.identity(dim, format="csr")
    h_stab_mat = 0.5 * (len(g_mats) * eye + g_sum) + 0.5 * (len(w_mats) * eye - w_sum)

    if sym is None:
        mk = lambda m: SparseOperator(m, tag, hermitian=True, check=False)
        return RubyOperators(
            tag=tag,
            pxp=mk(pxp_mat), pyp=mk(pyp_mat), n_tot=mk(n_mat),
            g_ops=tuple(mk(m) for m in g_mats),
            w_ops=tuple(mk(m) for m in w_mats),
            g_avg=mk(g_sum / len(g_mats)),
            w_avg=mk(w_sum / len(w_mats)),
            h_stab=mk(h_stab_mat),
            gauss_mask=gauss_mask,
            n_sites=lat.n_sites,
        )

    stag = Basis(f"ruby-{lat.Lx}x{lat.Ly}-sym", sym.dim)
    proj = sym.projector()
    red = lambda m: SparseOperator((proj.T @ m @ proj).tocsr(), stag,
                                   hermitian=True, check=False)
    # the Gauss-law subspace is group-invariant, so its indicator restricts
    # to orbit representatives
    rep_idx = basis.lookup(sym.orbit_reps)
    return RubyOperators(
        tag=stag,
        pxp=red(pxp_mat), pyp=red(pyp_mat), n_tot=red(n_mat),
        g_ops=(), w_ops=(),
        g_avg=red(g_sum / len(g_mats)),
        w_avg=red(w_sum / len(w_mats)),
        h_stab=red(h_stab_mat),
        gauss_mask=gauss_mask[rep_idx],
        n_sites=lat.n_sites,
        orbit_sizes=np.asarray(sym.orbit_sizes),
    )


def rvb_state(ops):
    """Uniform equal-phase superposition of all dimer coverings (G_v = -1 everywhere).

    On a reduced sector the orbit sums carry weight sqrt(orbit size), so the
    state coincides with the projection of the full-basis superposition (the
    RVB state is fully symmetric, hence lies inside the sector).
    """
    if int(ops.gauss_mask.sum()) == 0:
        raise NoCoverings("no configuration satisfies G_v = -1 at every vertex")
    if ops.orbit_sizes is None:
        amps = np.where(ops.gauss_mask, 1.0, 0.0).astype(complex)
    else:
        amps = np.where(ops.gauss_mask,
                        np.sqrt(ops.orbit_sizes.astype(float)), 0.0).astype(complex)
    amps /= np.linalg.norm(amps)
    return StateVector(amps, ops.tag)


def gauss_projector_apply(psi, ops):
    """Project onto the all-vertices-G_v=-1 subspace and renormalize."""
    if psi.basis != ops.tag:
        raise ValueError(f"state on {psi.basis.label!r}, operators on {ops.tag.label!r}")
    amps = np.where(ops.gauss_mask, psi.amplitudes, 0.0)
    nrm = np.linalg.norm(amps)
    if nrm < 1e-12:
        raise ZeroProjection("state has no weight in the Gauss-law subspace")
    return StateVector(amps / nrm, psi.basis)
