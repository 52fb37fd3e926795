"""Measures on configuration space: samplers and the exact-chain oracle.

Covers the product Bernoulli-p measure, the frozen-grid ergodic measures
built from a set Gamma that stays at spin 0 forever, the translation
invariant (non-ergodic) uniform mixture over grid offsets, and an exact
finite-state generator solver used as the stationarity oracle on small
boxes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph

from . import fabric
from .fabric import EventSeed
from .lattice import (BoundaryRule, Configuration, Region, Site,
                      sw_neighbors)


def sample_bernoulli(region: Region, p: float, seed: EventSeed,
                     boundary: BoundaryRule = BoundaryRule.GHOST_ONES
                     ) -> Configuration:
    """I.i.d. spins with P(1) = p, deterministic from the seed."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    spins = fabric.bernoulli_field(seed.with_domain(fabric.DOMAIN_INIT),
                                   region, p)
    return Configuration(region, spins, boundary)


# ---------------------------------------------------------------------------
# frozen-set measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GammaSet:
    """A candidate everywhere-frozen 0-set.

    Either a grid generator (modulus m with an offset: all sites with
    x or y congruent to the offset mod m) or an explicit finite site set.
    """

    m: Optional[int] = None
    offset: Site = Site(0, 0)
    explicit: Optional[frozenset] = None

    def __post_init__(self):
        if (self.m is None) == (self.explicit is None):
            raise ValueError("give either a grid modulus or an explicit set")
        if self.m is not None and self.m < 2:
            raise ValueError("grid modulus must be >= 2: smaller moduli "
                             "leave no unfrozen sites")

    def __contains__(self, site) -> bool:
        if self.explicit is not None:
            return Site(site[0], site[1]) in self.explicit
        return ((site[0] - self.offset.x) % self.m == 0
                or (site[1] - self.offset.y) % self.m == 0)

    def mask(self, window: Region) -> np.ndarray:
        """Boolean membership array of shape (height, width)."""
        if self.explicit is not None:
            out = np.zeros((window.height, window.width), bool)
            for s in self.explicit:
                if s in window:
                    out[s[1] - window.origin.y, s[0] - window.origin.x] = True
            return out
        xs = np.arange(window.origin.x, window.origin.x + window.width)
        ys = np.arange(window.origin.y, window.origin.y + window.height)
        gx, gy = np.meshgrid(xs, ys)
        return (((gx - self.offset.x) % self.m == 0)
                | ((gy - self.offset.y) % self.m == 0))


def build_gamma_grid(m: int, offset: Site, window: Region) -> GammaSet:
    """Grid frozen set: sites with x or y congruent to offset modulo m.

    Its complement within the window splits into open (m-1) x (m-1)
    boxes, each of which equilibrates independently.
    """
    if m < 2:
        raise ValueError("grid modulus must be >= 2")
    if not (0 <= offset[0] < m and 0 <= offset[1] < m):
        raise ValueError("offset coordinates must lie in [0, m)")
    return GammaSet(m=m, offset=Site(offset[0], offset[1]))


@dataclass
class GammaReport:
    ok: bool
    violations_a: list
    infinite_components: list
    notes: str


def validate_gamma(g: GammaSet, window: Region) -> GammaReport:
    """Check the structural conditions a frozen set must satisfy.

    Condition (a), sitewise: every member has its south or west neighbor
    also a member (evaluated through the generator predicate, so grid
    sets are checked against the full plane, not the window crop).
    Condition (b) concerns components of the complement on the infinite
    lattice; any window makes it vacuous, so for grid generators the
    modulus structure is what guarantees finite (m-1)x(m-1) components,
    and for explicit sets components touching the window edge are
    reported as potentially infinite.
    """
    violations = []
    for s in window.sites():
        if s in g:
            south, west = sw_neighbors(s)
            if south not in g and west not in g:
                violations.append(s)
    infinite = []
    notes = ""
    mask = g.mask(window)
    ncomp, labels = _complement_components(mask)
    if g.explicit is not None:
        edge = np.zeros_like(mask)
        edge[0, :] = edge[-1, :] = True
        edge[:, 0] = edge[:, -1] = True
        for lbl in range(ncomp):
            comp = labels == lbl
            if np.any(comp & edge):
                infinite.append(lbl)
        notes = ("components touching the window edge may extend "
                 "infinitely; condition (b) is not decidable from a "
                 "finite window")
    else:
        notes = (f"grid modulus {g.m}: complement components are open "
                 f"{g.m - 1}x{g.m - 1} boxes, so condition (b) holds on "
                 "the infinite lattice")
    ok = not violations and (g.explicit is None or not infinite)
    return GammaReport(ok, violations, infinite, notes)


def _complement_components(mask: np.ndarray) -> tuple[int, np.ndarray]:
    """Nearest-neighbor components of ~mask; label -1 on mask sites."""
    h, w = mask.shape
    free = ~mask
    n = h * w
    rows = []
    cols = []
    idx = np.arange(n).reshape(h, w)
    horiz = free[:, :-1] & free[:, 1:]
    rows.append(idx[:, :-1][horiz])
    cols.append(idx[:, 1:][horiz])
    vert = free[:-1, :] & free[1:, :]
    rows.append(idx[:-1, :][vert])
    cols.append(idx[1:, :][vert])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    graph = sp.coo_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    ncomp_all, labels = csgraph.connected_components(graph, directed=False)
    labels = labels.reshape(h, w)
    free_labels = np.unique(labels[free])
    remap = -np.ones(ncomp_all, np.int64)
    remap[free_labels] = np.arange(free_labels.size)
    out = np.where(free, remap[labels], -1)
    return free_labels.size, out


def lambda_gamma_initial(g: GammaSet, window: Region,
                         boundary: BoundaryRule = BoundaryRule.GHOST_ONES
                         ) -> Configuration:
    """Deterministic start whose evolution converges to the frozen-set
    measure: Gamma sites at 0, every other site at 1."""
    spins = np.where(g.mask(window), 0, 1).astype(np.int8)
    return Configuration(window, spins, boundary)


def collar_mask(g: GammaSet, window: Region) -> np.ndarray:
    """Sites whose south or west neighbor lies in Gamma: frozen at 1."""
    out = np.zeros((window.height, window.width), bool)
    for s in window.sites():
        if s in g:
            continue
        south, west = sw_neighbors(s)
        if south in g or west in g:
            out[s[1] - window.origin.y, s[0] - window.origin.x] = True
    return out


def draw_mixture_offset(m: int, seed: EventSeed) -> Site:
    """Uniform offset in [0, m) x [0, m), deterministic from the seed."""
    u = fabric.mark_at(seed.with_domain("mixture-offset"), Site(0, 0), 1)
    flat = min(int(u * m * m), m * m - 1)
    return Site(flat % m, flat // m)


def sample_lambda_gamma(g: GammaSet, p: float, window: Region,
                        seed: EventSeed) -> Configuration:
    """Equilibrium sample of the frozen-set measure on a window.

    Gamma sites are 0, the collar (sites with a SW neighbor in Gamma) is
    1, and the remaining components carry product Bernoulli-p spins: the
    exact-generator oracle identifies the component equilibrium as the
    product measure, so no burn-in is needed.
    """
    gamma = g.mask(window)
    collar = collar_mask(g, window)
    spins = fabric.bernoulli_field(seed.with_domain(fabric.DOMAIN_INIT),
                                   window, p)
    spins[collar] = 1
    spins[gamma] = 0
    return Configuration(window, spins, BoundaryRule.GHOST_ONES)


def sample_mixture_mu(m: int, p: float, window: Region,
                      seed: EventSeed) -> Configuration:
    """Sample of the uniform mixture of grid frozen-set measures.

    Draws the grid offset uniformly from the m^2 translates, then samples
    the corresponding frozen-set measure; the mixture is translation
    invariant but not ergodic (the drawn grid stays frozen forever).
    """
    offset = draw_mixture_offset(m, seed)
    return sample_lambda_gamma(build_gamma_grid(m, offset, window), p,
                               window, seed)


# ---------------------------------------------------------------------------
# exact finite-state chain
# ---------------------------------------------------------------------------

_MAX_EXACT_SITES = 16


class ExactChain:
    """Exact continuous-time generator of the dynamics on a tiny box.

    States are spin configurations encoded as bitmasks over the region's
    row-major site order; transitions flip one eligible site, rate p
    upward and 1-p downward.
    """

    def __init__(self, region: Region, p: float,
                 boundary: BoundaryRule = BoundaryRule.GHOST_ONES):
        if len(region) > _MAX_EXACT_SITES:
            raise ValueError(
                f"exact chain limited to {_MAX_EXACT_SITES} sites")
        if not 0 < p < 1:
            raise ValueError("p must lie strictly between 0 and 1")
        self.region = region
        self.p = p
        self.boundary = boundary
        self.nsites = len(region)
        self.nstates = 1 << self.nsites
        self._build()

    def _config(self, state: int) -> Configuration:
        bits = [(state >> i) & 1 for i in range(self.nsites)]
        spins = np.array(bits, np.int8).reshape(self.region.height,
                                                self.region.width)
        return Configuration(self.region, spins, self.boundary)

    def _build(self) -> None:
        rows, cols, rates = [], [], []
        r = self.region
        site_list = list(r.sites())
        for state in range(self.nstates):
            cfg = self._config(state)
            total = 0.0
            for i, s in enumerate(site_list):
                from .lattice import is_flip_eligible
                if not is_flip_eligible(cfg, s):
                    continue
                bit = (state >> i) & 1
                rate = (1 - self.p) if bit else self.p
                rows.append(state)
                cols.append(state ^ (1 << i))
                rates.append(rate)
                total += rate
            if total > 0:
                rows.append(state)
                cols.append(state)
                rates.append(-total)
        self.generator = sp.csr_matrix(
            (rates, (rows, cols)), shape=(self.nstates, self.nstates))

    def product_measure(self, p: Optional[float] = None) -> np.ndarray:
        """Product Bernoulli probability of every state."""
        p = self.p if p is None else p
        pi = np.ones(self.nstates)
        for state in range(self.nstates):
            for i in range(self.nsites):
                pi[state] *= p if (state >> i) & 1 else 1 - p
        return pi

    def detailed_balance_violation(self,
                                   pi: Optional[np.ndarray] = None) -> float:
        """Max |pi_i q_ij - pi_j q_ji| over all transitions."""
        pi = self.product_measure() if pi is None else pi
        q = self.generator.tocoo()
        worst = 0.0
        for i, j, rate in zip(q.row, q.col, q.data):
            if i == j:
                continue
            back = self.generator[j, i]
            worst = max(worst, abs(pi[i] * rate - pi[j] * back))
        return worst


@dataclass
class StationaryResult:
    """Either the unique stationary vector or the closed classes of a
    reducible chain."""

    pi: Optional[np.ndarray]
    closed_classes: Optional[list]
    detailed_balance_violation: float


def exact_stationary(chain: ExactChain) -> StationaryResult:
    """Solve pi Q = 0, sum pi = 1 for the chain's stationary law.

    A reducible chain (e.g. ghost-zeros boundary, where nothing is ever
    eligible) gets its closed communicating classes reported instead of
    a meaningless vector.
    """
    q = chain.generator
    adj = q.copy()
    adj.setdiag(0)
    adj.eliminate_zeros()
    ncomp, labels = csgraph.connected_components(adj, directed=True,
                                                 connection="strong")
    closed = _closed_classes(adj, ncomp, labels)
    db = chain.detailed_balance_violation()
    if len(closed) > 1:
        classes = [np.flatnonzero(labels == lbl).tolist() for lbl in closed]
        return StationaryResult(None, classes, db)

    n = chain.nstates
    a = q.T.tolil()
    a[n - 1, :] = 1.0  # replace one balance equation with normalization
    b = np.zeros(n)
    b[n - 1] = 1.0
    if n <= 4096:
        pi = np.linalg.solve(a.toarray(), b)
    else:
        pi = sp.linalg.spsolve(a.tocsc(), b)
    return StationaryResult(pi, None, db)


def _closed_classes(adj, ncomp: int, labels: np.ndarray) -> list:
    """Strongly connected components with no transition leaving them."""
    coo = adj.tocoo()
    leaves = np.zeros(ncomp, bool)
    for i, j in zip(coo.row, coo.col):
        if labels[i] != labels[j]:
            leaves[labels[i]] = True
    return np.flatnonzero(~leaves).tolist()
