"""Backward-in-time query engine.

Resolves the spin at (site, t) directly from the event fabric: find the
last clock occurrence at the site before t, recursively resolve both
southwest neighbors at that occurrence time, and either apply the mark
rule (both neighbors at 1) or continue to the previous occurrence; with
no occurrences left the initial spin answers.  Because SW and WS query
paths merge, values are memoized per (site, event index), which turns
the query tree into a DAG.

Shares the fabric with the forward engine, so on a common seed and
initial condition the two must agree exactly, site by site.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fabric
from .fabric import EventSeed
from .lattice import BoundaryRule, Configuration, Region, Site, sw_neighbors

DEFAULT_NODE_BUDGET = 10 ** 8


class BudgetExhausted(RuntimeError):
    """The query recursion hit its node budget; no value was fabricated."""


@dataclass
class QueryStats:
    """Footprint of one backward evaluation.

    queried_sites is the query region Q_t: every lattice site whose spin
    history was consulted at least once.  tree_size counts distinct
    (site, event) nodes resolved; max_depth is the deepest recursion.
    """

    queried_sites: set = field(default_factory=set)
    tree_size: int = 0
    max_depth: int = 0


class FixedInitial:
    """Initial condition given by a finite configuration.

    Sites outside the window are frozen for all time at the ghost value;
    with a periodic boundary, queries wrap onto the torus instead.
    """

    def __init__(self, config: Configuration):
        if config.boundary is BoundaryRule.HALF_PLANE:
            raise ValueError("use LazyPlaneInitial for half-plane runs")
        self.config = config.copy()
        self.region = config.region
        self.boundary = config.boundary

    def canonical(self, site: Site) -> Site:
        if self.boundary is BoundaryRule.PERIODIC and site not in self.region:
            r = self.region
            return Site(r.origin.x + (site.x - r.origin.x) % r.width,
                        r.origin.y + (site.y - r.origin.y) % r.height)
        return site

    def frozen_value(self, site: Site):
        """Constant spin for an exterior site, or None for process sites."""
        if site in self.region or self.boundary is BoundaryRule.PERIODIC:
            return None
        return 1 if self.boundary is BoundaryRule.GHOST_ONES else 0

    def spin0(self, site: Site) -> int:
        return self.config.spin(site)


class LazyPlaneInitial:
    """Initial law for infinite-plane experiments.

    Time-0 spins are deterministic Bernoulli-p draws from the seed's
    "init" domain, except inside ``zero_region`` (a Region or a site
    predicate), where the spin is 0.  No site is frozen; any site of
    the plane may be queried.
    """

    def __init__(self, seed: EventSeed, p: float, zero_region=None):
        self.seed = seed.with_domain(fabric.DOMAIN_INIT)
        self.p = p
        self.zero_region = zero_region

    def canonical(self, site: Site) -> Site:
        return site

    def frozen_value(self, site: Site):
        return None

    def spin0(self, site: Site) -> int:
        zr = self.zero_region
        if zr is not None and (zr(site) if callable(zr) else site in zr):
            return 0
        u = fabric.mark_at(self.seed, site, 1)
        return 1 if u <= self.p else 0


class QueryMemo:
    """Resolved (site, event index) spins shared across queries.

    Single-writer: concurrent probes must use disjoint memos.
    """

    def __init__(self):
        self.values: dict = {}
        self._times: dict = {}
        self._ceiling: dict = {}

    def times(self, seed: EventSeed, site: Site, t: float) -> np.ndarray:
        have = self._ceiling.get(site, -1.0)
        if t > have:
            self._times[site] = fabric.event_times_upto(seed, site, t)
            self._ceiling[site] = t
        return self._times[site]


def _resolve(site: Site, k: int, p: float, seed: EventSeed, initial,
             memo: QueryMemo, stats: QueryStats, budget: int) -> int:
    """Value of the node (site, k): the spin reported just after the
    site's k-th event (k = 0 meaning the initial spin)."""
    values = memo.values
    stack = [(site, k)]
    while stack:
        if len(stack) > stats.max_depth:
            stats.max_depth = len(stack)
        s, k = stack[-1]
        if (s, k) in values:
            stack.pop()
            continue
        stats.queried_sites.add(s)
        if stats.tree_size >= budget:
            raise BudgetExhausted(
                f"query budget of {budget} nodes exhausted at {s}")
        if k == 0:
            values[(s, 0)] = initial.spin0(s)
            stats.tree_size += 1
            stack.pop()
            continue
        te = memo._times[s][k - 1]
        south, west = sw_neighbors(s)
        pending = False
        nb_vals = []
        for nb in (south, west):
            nb = initial.canonical(nb)
            fv = initial.frozen_value(nb)
            if fv is not None:
                nb_vals.append(fv)
                continue
            times_nb = memo.times(seed, nb, _ceiling_hint(memo, s))
            kk = int(np.searchsorted(times_nb, te, side="left"))
            if (nb, kk) in values:
                stats.queried_sites.add(nb)
                nb_vals.append(values[(nb, kk)])
            else:
                stack.append((nb, kk))
                pending = True
                break
        if pending:
            continue
        if nb_vals[0] == 1 and nb_vals[1] == 1:
            mark = fabric.mark_at(seed, s, k)
            values[(s, k)] = 1 if mark <= p else 0
            stats.tree_size += 1
            stack.pop()
        elif (s, k - 1) in values:
            values[(s, k)] = values[(s, k - 1)]
            stats.tree_size += 1
            stack.pop()
        else:
            stack.append((s, k - 1))
    return values[(site, k)]


def _ceiling_hint(memo: QueryMemo, site: Site) -> float:
    # event lists are always materialized up to the probe time first,
    # so a site reached by a neighbor query inherits that ceiling
    return memo._ceiling[site]


def spin_at(site, t: float, p: float, seed: EventSeed, initial,
            memo: QueryMemo | None = None,
            node_budget: int = DEFAULT_NODE_BUDGET
            ) -> tuple[int, QueryStats]:
    """Spin at (site, t) as the graphical construction defines it.

    ``initial`` is a FixedInitial or LazyPlaneInitial; ``memo`` may be
    shared between probes of one (seed, p, initial) triple.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if not 0 < p < 1:
        raise ValueError("p must lie strictly between 0 and 1")
    site = initial.canonical(Site(site[0], site[1]))
    stats = QueryStats()
    fv = initial.frozen_value(site)
    if fv is not None:
        return fv, stats
    memo = memo if memo is not None else QueryMemo()
    times = memo.times(seed, site, t)
    k = int(np.searchsorted(times, t, side="right"))
    value = _resolve(site, k, p, seed, initial, memo, stats, node_budget)
    return value, stats


def evaluate_region(region: Region, t: float, p: float, seed: EventSeed,
                    initial, memo: QueryMemo | None = None,
                    node_budget: int = DEFAULT_NODE_BUDGET
                    ) -> tuple[Configuration, QueryStats]:
    """Resolve every site of a region at time t, sharing one memo.

    The returned configuration carries the initial condition's boundary
    rule (HALF_PLANE for a lazy plane); the stats aggregate the whole
    evaluation, with queried_sites = Q_t.
    """
    memo = memo if memo is not None else QueryMemo()
    stats = QueryStats()
    spins = np.zeros((region.height, region.width), np.int8)
    boundary = (initial.boundary if isinstance(initial, FixedInitial)
                else BoundaryRule.HALF_PLANE)
    for flat, s in enumerate(region.sites()):
        s = initial.canonical(s)
        fv = initial.frozen_value(s)
        if fv is not None:
            value = fv
        else:
            times = memo.times(seed, s, t)
            k = int(np.searchsorted(times, t, side="right"))
            stats.queried_sites.add(s)
            value = _resolve(s, k, p, seed, initial, memo, stats,
                             node_budget)
        iy, ix = divmod(flat, region.width)
        spins[iy, ix] = value
    cfg = Configuration(region, spins, boundary)
    if boundary is BoundaryRule.HALF_PLANE:
        cfg.exterior = None
    return cfg, stats


def query_tree_histogram(probes, p: float, seed: EventSeed, initial,
                         node_budget: int = DEFAULT_NODE_BUDGET) -> dict:
    """Empirical distribution of query-tree size and depth.

    Each probe (site, t) is evaluated with a fresh memo, so sizes are
    per-tree, not amortized.
    """
    if not probes:
        raise ValueError("need at least one probe")
    sizes = np.zeros(len(probes), np.int64)
    depths = np.zeros(len(probes), np.int64)
    for i, (site, t) in enumerate(probes):
        _, stats = spin_at(site, t, p, seed, initial,
                           memo=QueryMemo(), node_budget=node_budget)
        sizes[i] = stats.tree_size
        depths[i] = stats.max_depth
    return {
        "tree_size": sizes,
        "max_depth": depths,
        "mean_size": float(sizes.mean()),
        "mean_depth": float(depths.mean()),
        "max_size": int(sizes.max()),
    }
