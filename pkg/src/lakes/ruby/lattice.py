"""Periodic ruby-lattice geometry.

Atoms sit on the links of a kagome lattice wrapped on a torus.  The kagome
lattice is the medial lattice of a triangular lattice with primitive vectors
``t1 = (4a, 0)`` and ``t2 = (2a, 2*sqrt(3)*a)``; its edges have length ``2a``
and the link midpoints (the atom positions) form a ruby lattice.  Every atom
has six neighbours closer than the next distance shell at ``sqrt(7)*a``:
the pairs of links sharing a kagome vertex, at distances ``a``, ``sqrt(3)*a``
and ``2a``.  A blockade radius slightly above ``2a`` therefore blockades
exactly the vertex-sharing pairs, so each kagome vertex can host at most one
excited link (a dimer).

All positions lie on the quarter-integer grid of the (t1, t2) frame, so
points are identified on the torus through exact integer keys
``(4*u1 mod 4*Lx, 4*u2 mod 4*Ly)``; floating point only enters distances.
"""

from dataclasses import dataclass, field

import numpy as np

from lakes.errors import BadFactor


def _torus_distances(a_pts, b_pts, span):
    """Minimum-image distances between two point sets on the torus."""
    diff = a_pts[:, None, :] - b_pts[None, :, :]
    best = np.full(diff.shape[:2], np.inf)
    for m in (-1, 0, 1):
        for k in (-1, 0, 1):
            shift = m * span[0] + k * span[1]
            best = np.minimum(best, np.linalg.norm(diff + shift, axis=-1))
    return best


@dataclass(frozen=True)
class RubyLattice:
    """Geometry and adjacency data for atoms on kagome links of an Lx-by-Ly torus."""

    Lx: int
    Ly: int
    a: float
    R_b: float
    sites: np.ndarray                 # (N, 2) atom positions
    blockade_pairs: tuple             # sorted (i, j) pairs with distance <= R_b
    vertices: tuple                   # per kagome vertex: 4 incident site indices
    plaquettes: tuple                 # per hexagon: 6 triangles as (edge, left, right)
    translation_perms: tuple = field(repr=False, default=())
    inversion_perm: tuple = field(repr=False, default=())

    @property
    def n_sites(self):
        return self.sites.shape[0]

    def neighbor_sets(self):
        nbrs = [set() for _ in range(self.n_sites)]
        for i, j in self.blockade_pairs:
            nbrs[i].add(j)
            nbrs[j].add(i)
        return nbrs

    def symmetry_permutations(self):
        """Site permutations of the translation x inversion group (order 2*Lx*Ly)."""
        perms = []
        for tr in self.translation_perms:
            perms.append(tuple(tr))
            perms.append(tuple(tr[k] for k in self.inversion_perm))
        return perms


def build_lattice(Lx, Ly, rb_factor=1.01):
    """Construct the periodic ruby lattice for an ``Lx x Ly`` torus of unit cells.

    ``rb_factor`` fixes the blockade radius ``R_b = rb_factor * 2a``; it must lie
    in (1, 1.2) so that R_b separates the vertex-sharing distance shell (at 2a)
    from the next shell (at sqrt(7)*a).  The choice is validated against the
    actual sorted distance spectrum and a :class:`BadFactor` is raised if any
    unintended pair falls inside R_b or any vertex-sharing pair falls outside.
    """
    if Lx < 1 or Ly < 1:
        raise ValueError("lattice extents must be >= 1")
    if not (1.0 < rb_factor < 1.2):
        raise BadFactor(f"rb_factor must lie in (1, 1.2), got {rb_factor}")

    a = 1.0
    t1 = np.array([4.0 * a, 0.0])
    t2 = np.array([2.0 * a, 2.0 * np.sqrt(3.0) * a])
    span = np.array([Lx * t1, Ly * t2])

    # exact integer coordinates: a point u1*t1 + u2*t2 with quarter-integer
    # (u1, u2) is keyed by (4*u1 mod 4*Lx, 4*u2 mod 4*Ly)
    def key(q1, q2):
        return (q1 % (4 * Lx), q2 % (4 * Ly))

    def xy(k):
        return (k[0] * t1 + k[1] * t2) / 4.0

    # Triangular-lattice vertices (hexagon centres), one per cell, in integer
    # quarters: (4m, 4n).
    centers = [(4 * m, 4 * n) for m in range(Lx) for n in range(Ly)]

    # Faces of the triangular lattice: up and down triangle per cell, corners
    # in quarter coordinates.
    faces = []
    for (cm, cn) in centers:
        faces.append(((cm, cn), (cm + 4, cn), (cm, cn + 4)))            # up
        faces.append(((cm + 4, cn), (cm, cn + 4), (cm + 4, cn + 4)))    # down

    def mid(p, q):
        return ((p[0] + q[0]) // 2, (p[1] + q[1]) // 2)

    site_index = {}
    site_keys = []

    def _site_at(k1, k2):
        k = key(k1, k2)
        if k not in site_index:
            site_index[k] = len(site_keys)
            site_keys.append(k)
        return site_index[k]

    face_sites = []
    for A, B, C in faces:
        mAB, mAC, mBC = mid(A, B), mid(A, C), mid(B, C)
        face_sites.append((
            _site_at(*mid(mAB, mAC)),   # atom whose kagome edge touches corner A
            _site_at(*mid(mAB, mBC)),   # touches corner B
            _site_at(*mid(mAC, mBC)),   # touches corner C
        ))

    n = len(site_keys)
    if n != 6 * Lx * Ly:
        raise AssertionError(f"expected {6 * Lx * Ly} sites, built {n}")
    sites = np.array([xy(k) for k in site_keys])

    # Kagome vertices: midpoints of triangular edges, 3 per cell.
    kag_keys = []
    for (cm, cn) in centers:
        kag_keys.append(key(cm + 2, cn))        # mid of (R, R+t1)
        kag_keys.append(key(cm, cn + 2))        # mid of (R, R+t2)
        kag_keys.append(key(cm + 2, cn + 2))    # mid of (R+t1, R+t2)
    kag = np.array([xy(k) for k in kag_keys])

    # Vertex -> incident atoms: the four link midpoints at distance exactly a.
    vd = _torus_distances(kag, sites, span)
    vertices = []
    for row in vd:
        inc = tuple(int(i) for i in np.nonzero(np.abs(row - a) < 1e-6)[0])
        if len(inc) != 4:
            raise AssertionError(f"kagome vertex with {len(inc)} incident links")
        vertices.append(inc)

    # Validate the blockade radius against the distance spectrum: every pair
    # within R_b must share a kagome vertex (distance shells a, sqrt(3)a, 2a).
    dist = _torus_distances(sites, sites, span)
    R_b = rb_factor * 2.0 * a
    shared = set()
    for inc in vertices:
        for x in range(4):
            for y in range(x + 1, 4):
                shared.add((min(inc[x], inc[y]), max(inc[x], inc[y])))
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            if dist[i, j] <= R_b:
                if (i, j) not in shared:
                    raise BadFactor(
                        f"rb_factor={rb_factor} blockades pair {(i, j)} at distance "
                        f"{dist[i, j]:.6f} which shares no kagome vertex")
                pairs.append((i, j))
    if set(pairs) != shared:
        missing = shared - set(pairs)
        raise BadFactor(f"rb_factor={rb_factor} misses vertex-sharing pairs {sorted(missing)[:4]}")

    # Hexagonal plaquettes, one per triangular vertex R: the six triangles
    # touching R.  In each, the atom on the pair of edge midpoints adjacent to
    # R lies on the hexagon; the other two atoms are swapped by the loop.
    plaquettes = []
    for (cm, cn) in centers:
        Rk = key(cm, cn)
        tris = []
        for corners, atoms in zip(faces, face_sites):
            match = [k for k in range(3) if key(*corners[k]) == Rk]
            if not match:
                continue
            k = match[0]
            others = atoms[:k] + atoms[k + 1:]
            tris.append((atoms[k], others[0], others[1]))
        if len(tris) != 6:
            raise AssertionError(f"hexagon with {len(tris)} adjacent triangles")
        plaquettes.append(tuple(tris))

    # Symmetry group: torus translations by (t1, t2) multiples and inversion
    # about a hexagon centre; both permute the atom set (exact on integer keys).
    def _perm_from_map(mapper):
        perm = []
        for k in site_keys:
            img = key(*mapper(k))
            if img not in site_index:
                raise AssertionError("symmetry image is not a lattice site")
            perm.append(site_index[img])
        if sorted(perm) != list(range(n)):
            raise AssertionError("symmetry map is not a permutation")
        return tuple(perm)

    translations = []
    for m in range(Lx):
        for kk in range(Ly):
            translations.append(
                _perm_from_map(lambda p, dm=4 * m, dn=4 * kk: (p[0] + dm, p[1] + dn)))
    inversion = _perm_from_map(lambda p: (-p[0], -p[1]))

    return RubyLattice(
        Lx=Lx, Ly=Ly, a=a, R_b=R_b,
        sites=sites,
        blockade_pairs=tuple(sorted(pairs)),
        vertices=tuple(vertices),
        plaquettes=tuple(plaquettes),
        translation_perms=tuple(translations),
        inversion_perm=inversion,
    )
