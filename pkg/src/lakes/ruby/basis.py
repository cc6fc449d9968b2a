"""Blockaded configuration basis and its translation/inversion reduction.

Configurations are stored as integer bitmasks (site ``i`` is bit ``i``) so
that blockade checks, operator actions, and symmetry images are cheap bit
arithmetic.  The blockaded basis is exactly the set of independent sets of
the blockade graph; the symmetric basis keeps one representative per orbit
of the translation x inversion group, i.e. the zero-momentum inversion-even
sector spanned by normalized orbit sums ``|o> = (1/sqrt(n_o)) sum_c |c>``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from lakes.errors import GroupActionInvalid, TooLarge

ENUMERATION_LIMIT = 40


@dataclass(frozen=True)
class BlockadedBasis:
    """All independent sets of the blockade graph, sorted by bitmask value."""

    n_sites: int
    configs: np.ndarray            # uint64, ascending
    site_masks: np.ndarray         # per-site neighbour bitmask (uint64)

    @property
    def dim(self):
        return len(self.configs)

    @property
    def empty_index(self):
        return 0    # ascending order puts the all-zero config first

    def index_of(self, config):
        i = int(np.searchsorted(self.configs, np.uint64(config)))
        if i >= self.dim or self.configs[i] != np.uint64(config):
            raise KeyError(f"config {config:#x} not in blockaded basis")
        return i

    def lookup(self, targets):
        """Indices of target bitmasks; -1 marks configs outside the basis."""
        targets = np.asarray(targets, dtype=np.uint64)
        pos = np.searchsorted(self.configs, targets)
        pos = np.minimum(pos, self.dim - 1)
        ok = self.configs[pos] == targets
        return np.where(ok, pos, -1).astype(np.int64)

    def occupation(self):
        """(dim, n_sites) boolean occupation table."""
        shifts = np.arange(self.n_sites, dtype=np.uint64)
        return ((self.configs[:, None] >> shifts[None, :]) & np.uint64(1)).astype(bool)


@dataclass(frozen=True)
class SymmetricBasis:
    """Orbit representatives of the blockaded basis under translation x inversion."""

    full: BlockadedBasis
    orbit_reps: np.ndarray         # uint64, ascending
    orbit_sizes: np.ndarray        # int64, per representative
    rep_of: np.ndarray = field(repr=False, default=None)   # per full config: orbit index
    group_order: int = 0

    @property
    def dim(self):
        return len(self.orbit_reps)

    def projector(self):
        """Sparse (full_dim x sym_dim) isometry whose columns are orbit sums."""
        weights = 1.0 / np.sqrt(self.orbit_sizes[self.rep_of])
        return sp.csr_matrix(
            (weights, (np.arange(self.full.dim), self.rep_of)),
            shape=(self.full.dim, self.dim))

    def project_operator(self, op):
        p = self.projector()
        return (p.T @ op @ p).tocsr()

    def project_state(self, vec):
        return self.projector().T @ vec

    def lift_state(self, vec):
        return self.projector() @ vec


def enumerate_blockaded_basis(lat):
    """Enumerate every configuration with no blockaded pair excited.

    Depth-first over sites in index order, pruning occupied-neighbour
    branches; results are sorted ascending by bitmask, so the empty
    configuration is entry 0.
    """
    n = lat.n_sites
    if n > ENUMERATION_LIMIT:
        raise TooLarge(f"{n} sites exceeds enumeration limit {ENUMERATION_LIMIT}")
    masks = [0] * n
    for i, j in lat.blockade_pairs:
        masks[i] |= 1 << j
        masks[j] |= 1 << i

    out = []
    stack = [(0, 0, 0)]   # (next site, config, blocked mask)
    while stack:
        i, cfg, blocked = stack.pop()
        if i == n:
            out.append(cfg)
            continue
        stack.append((i + 1, cfg, blocked))
        if not (blocked >> i) & 1:
            stack.append((i + 1, cfg | (1 << i), blocked | masks[i]))
    out.sort()
    return BlockadedBasis(
        n_sites=n,
        configs=np.array(out, dtype=np.uint64),
        site_masks=np.array(masks, dtype=np.uint64),
    )


def permute_configs(configs, perm, n_sites):
    """Apply a site permutation (site k -> perm[k]) to a batch of bitmasks."""
    shifts = np.arange(n_sites, dtype=np.uint64)
    bits = ((configs[:, None] >> shifts[None, :]) & np.uint64(1)).astype(np.uint64)
    weights = (np.uint64(1) << shifts)
    perm = np.asarray(perm, dtype=np.int64)
    return bits @ weights[perm]


def symmetry_reduce(basis, lat):
    """Reduce the blockaded basis to the translation+inversion symmetric sector."""
    perms = lat.symmetry_permutations()
    n = basis.n_sites
    for p in perms:
        if sorted(p) != list(range(n)):
            raise GroupActionInvalid("group element is not a site permutation")

    images = np.empty((len(perms), basis.dim), dtype=np.uint64)
    for g, p in enumerate(perms):
        img = permute_configs(basis.configs, p, n)
        if basis.lookup(img).min() < 0:
            raise GroupActionInvalid("group element maps outside the blockaded basis")
        images[g] = img

    rep_cfg = images.min(axis=0)
    images.sort(axis=0)
    distinct = np.count_nonzero(np.diff(images, axis=0), axis=0) + 1

    orbit_reps, rep_of = np.unique(rep_cfg, return_inverse=True)
    sizes = np.zeros(len(orbit_reps), dtype=np.int64)
    sizes[rep_of] = distinct          # every member reports the same orbit size
    if int(sizes.sum()) != basis.dim:
        raise GroupActionInvalid("orbits do not partition the blockaded basis")

    return SymmetricBasis(
        full=basis,
        orbit_reps=orbit_reps,
        orbit_sizes=sizes,
        rep_of=rep_of,
        group_order=len(perms),
    )
