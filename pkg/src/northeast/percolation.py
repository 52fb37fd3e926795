"""Oriented southwest 0-cluster machinery.

A spin-0 site whose south or west neighbor is permanently 0 can never
flip, so 0-clusters connected to a frozen anchor by south/west steps
(strictly axial, no diagonals) are themselves frozen.  This module
detects such clusters statically, traces the boundary-attached cluster
of a window through the dynamics as a jump process, and estimates the
oriented-site-percolation critical parameter beta_c that separates the
frozen and mixing phases (the model's transition sits at p_c =
1 - beta_c).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels, fabric, forward
from .fabric import EventSeed
from .lattice import BoundaryRule, Configuration, Region, Site
from .measures import sample_bernoulli


# ---------------------------------------------------------------------------
# static cluster detection
# ---------------------------------------------------------------------------


def _sw_attached_mask(zero: np.ndarray) -> np.ndarray:
    """0-sites linked to the window's SW edge by south/west 0-steps.

    Recursion: a zero cell is attached iff it lies on the bottom row or
    west column, or its south or west neighbor is attached.  Evaluated
    row by row from the south; within a row, attachment spreads east
    through each contiguous run of zeros from any seeded cell.
    """
    h, w = zero.shape
    out = np.zeros((h, w), bool)
    idx = np.arange(w)
    below = np.zeros(w, bool)
    for iy in range(h):
        z = zero[iy]
        seed = z & below
        seed[0] |= z[0]
        if iy == 0:
            seed |= z
        last_seed = np.maximum.accumulate(np.where(seed, idx, -1))
        last_block = np.maximum.accumulate(np.where(~z, idx, -1))
        below = z & (last_seed > last_block)
        out[iy] = below
    return out


def frozen_zero_mask(c: Configuration) -> np.ndarray:
    """Boolean (height, width) mask of `frozen_zero_cluster`."""
    return _sw_attached_mask(c.spins == 0)


def frozen_zero_cluster(c: Configuration) -> set[Site]:
    """Sites with a directed 0-path (south/west steps) to the SW edge.

    The finite-window proxy for membership in an unbounded southwest
    0-cluster; it overestimates freezing, since a path that exits the
    window might terminate just outside it.
    """
    mask = frozen_zero_mask(c)
    r = c.region
    return {Site(r.origin.x + int(ix), r.origin.y + int(iy))
            for iy, ix in zip(*np.nonzero(mask))}


# ---------------------------------------------------------------------------
# the boundary-attached cluster and its jump process
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClusterSnapshot:
    """The 0-cluster attached to a window's southwest boundary.

    Membership and the boundary counts describe the window-restricted
    chain with all-one exterior: a member is a spin-0 site whose south
    or west neighbor is exterior or itself a member.  The interior
    southwest boundary (count A) is the flip-eligible members; the
    exterior southwest boundary (count B) is the spin-1 south/west
    neighbor sites of those A-sites, so B <= 2A structurally, and the
    southwest-most member is always eligible, so A >= 1 whenever the
    cluster is nonempty.  Both bounds are enforced here as hard
    invariants.
    """

    members: frozenset
    interior_boundary: frozenset
    exterior_boundary: frozenset
    time: float = 0.0

    def __post_init__(self):
        if self.members and not self.interior_boundary:
            raise RuntimeError(
                "nonempty cluster with no flip-eligible member")
        if len(self.exterior_boundary) > 2 * len(self.interior_boundary):
            raise RuntimeError(
                f"exterior boundary {len(self.exterior_boundary)} exceeds "
                f"twice the interior boundary "
                f"{len(self.interior_boundary)}")

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def a_count(self) -> int:
        return len(self.interior_boundary)

    @property
    def b_count(self) -> int:
        return len(self.exterior_boundary)


def _snapshot_from_mask(member: np.ndarray, spins: np.ndarray,
                        origin: Site, time: float) -> ClusterSnapshot:
    h, w = member.shape
    members = set()
    interior = set()
    exterior = set()
    for iy, ix in zip(*np.nonzero(member)):
        s = Site(origin.x + int(ix), origin.y + int(iy))
        members.add(s)
        s_one = iy == 0 or spins[iy - 1, ix] == 1
        w_one = ix == 0 or spins[iy, ix - 1] == 1
        if s_one and w_one:
            interior.add(s)
            exterior.add(Site(s.x, s.y - 1))
            exterior.add(Site(s.x - 1, s.y))
    return ClusterSnapshot(frozenset(members), frozenset(interior),
                           frozenset(exterior), time)


def cluster_attached(c: Configuration, window: Optional[Region] = None,
                     time: float = 0.0) -> ClusterSnapshot:
    """Snapshot of the SW-boundary-attached 0-cluster of a window.

    ``window`` defaults to the whole configuration; when it is a proper
    sub-window, only spins inside it matter and its exterior reads spin
    1 (the window-restricted chain's view).
    """
    r = c.region
    window = window or r
    if (window.origin not in r
            or Site(window.origin.x + window.width - 1,
                    window.origin.y + window.height - 1) not in r):
        raise ValueError("window must lie inside the configuration")
    y0 = window.origin.y - r.origin.y
    x0 = window.origin.x - r.origin.x
    spins = c.spins[y0:y0 + window.height, x0:x0 + window.width]
    member = _sw_attached_mask(spins == 0)
    return _snapshot_from_mask(member, spins, window.origin, time)


class ClusterJump(NamedTuple):
    """One unit change of the attached-cluster size.

    ``a`` and ``b`` are the interior/exterior boundary counts of the
    pre-jump configuration.  A single reset whose cascade changes the
    cluster by several sites is recorded as that many unit jumps sharing
    one time and one pre-jump (a, b).
    """

    time: float
    x_before: int
    x_after: int
    a: int
    b: int
    kind: str  # "addition" or "deletion"


@dataclass
class ClusterTrace:
    """Jump history of the attached-cluster size along one run."""

    region: Region
    p: float
    t_max: float
    jumps: list = field(default_factory=list)

    def deletion_fraction(self, min_samples: int = 500) -> dict:
        """Per (a, b) cell: (deletion fraction, sample count), over
        cells with at least ``min_samples`` recorded jumps."""
        cells: dict = {}
        for j in self.jumps:
            dele, tot = cells.get((j.a, j.b), (0, 0))
            cells[(j.a, j.b)] = (dele + (j.kind == "deletion"), tot + 1)
        return {key: (dele / tot, tot) for key, (dele, tot) in cells.items()
                if tot >= min_samples}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time", "x_before", "x_after", "a", "b",
                             "kind"])
            for j in self.jumps:
                writer.writerow([repr(j.time), j.x_before, j.x_after,
                                 j.a, j.b, j.kind])


class _IncrementalCluster:
    """Attached-cluster membership maintained across single-site flips.

    Support only ever comes from the south/west, so a flip at one site
    can change membership only in its own north-east cone; additions and
    removals propagate through a worklist instead of a full recompute.
    """

    def __init__(self, spins: np.ndarray):
        self.spins = spins
        self.member = _sw_attached_mask(spins == 0)
        self.h, self.w = spins.shape

    def _base(self, iy: int, ix: int) -> bool:
        return iy == 0 or ix == 0

    def _supported(self, iy: int, ix: int) -> bool:
        return (self._base(iy, ix)
                or self.member[iy - 1, ix] or self.member[iy, ix - 1])

    def _ne_neighbors(self, iy: int, ix: int):
        if iy + 1 < self.h:
            yield iy + 1, ix
        if ix + 1 < self.w:
            yield iy, ix + 1

    def apply_flip(self, iy: int, ix: int) -> list[tuple[int, int]]:
        """Update for the already-applied spin flip at (iy, ix); returns
        the membership changes in cascade order."""
        changed = []
        if self.spins[iy, ix] == 0:
            if not self._supported(iy, ix):
                return changed
            work = [(iy, ix)]
            while work:
                jy, jx = work.pop()
                if self.member[jy, jx] or self.spins[jy, jx] != 0:
                    continue
                if not self._supported(jy, jx):
                    continue
                self.member[jy, jx] = True
                changed.append((jy, jx))
                work.extend(self._ne_neighbors(jy, jx))
        else:
            if not self.member[iy, ix]:
                return changed
            self.member[iy, ix] = False
            changed.append((iy, ix))
            work = list(self._ne_neighbors(iy, ix))
            while work:
                jy, jx = work.pop()
                if not self.member[jy, jx] or self._supported(jy, jx):
                    continue
                self.member[jy, jx] = False
                changed.append((jy, jx))
                work.extend(self._ne_neighbors(jy, jx))
        return changed


def trace_cluster_process(window: Region, p: float, seed: EventSeed,
                          t_max: float,
                          initial: Optional[Configuration] = None,
                          recompute_every: int = 1000) -> ClusterTrace:
    """Co-simulate the dynamics on a ghost-ones window and record every
    unit jump of the attached-cluster size.

    The initial configuration defaults to an i.i.d. Bernoulli-p draw
    from the seed.  Membership is maintained incrementally; every
    ``recompute_every`` consumed events it is re-derived from scratch
    and any mismatch raises (drift guard).
    """
    if not 0 < p < 1:
        raise ValueError("p must lie strictly between 0 and 1")
    if initial is None:
        initial = sample_bernoulli(window, p, seed)
    if initial.boundary is not BoundaryRule.GHOST_ONES:
        raise ValueError("cluster tracing runs on ghost-ones windows")
    state = forward.SimulationState(initial)
    cluster = _IncrementalCluster(state.config.spins)
    trace = ClusterTrace(window, p, t_max)
    events = 0
    heap = state._ensure_heap(seed)
    while heap[0][0] <= t_max:
        pre = _snapshot_from_mask(cluster.member, cluster.spins,
                                  window.origin, state.clock)
        entry = forward.step(state, p, seed)
        events += 1
        if entry is not None and entry.new_spin != entry.old_spin:
            s = entry.site
            iy = s.y - window.origin.y
            ix = s.x - window.origin.x
            changed = cluster.apply_flip(iy, ix)
            kind = "addition" if entry.new_spin == 0 else "deletion"
            x = pre.size
            for _ in changed:
                nxt = x + (1 if kind == "addition" else -1)
                trace.jumps.append(ClusterJump(
                    entry.time, x, nxt, pre.a_count, pre.b_count, kind))
                x = nxt
        if events % recompute_every == 0:
            fresh = _sw_attached_mask(cluster.spins == 0)
            if not np.array_equal(fresh, cluster.member):
                raise RuntimeError(
                    "incremental cluster membership drifted from the "
                    "from-scratch recomputation")
        # validate the post-jump snapshot invariants as well
        _snapshot_from_mask(cluster.member, cluster.spins, window.origin,
                            state.clock)
    state.clock = t_max
    return trace


# ---------------------------------------------------------------------------
# oriented site percolation estimator
# ---------------------------------------------------------------------------

# Survival probability to depth d at the critical point, measured once
# at high precision and frozen here as the bisection target; the
# exponent is the critical survival-decay rate of this universality
# class.
_SURVIVAL_DECAY = 0.1595
_SURVIVAL_SCALE = 0.253 * 1000.0 ** _SURVIVAL_DECAY


def critical_survival_threshold(depth: int) -> float:
    return _SURVIVAL_SCALE * depth ** (-_SURVIVAL_DECAY)


def oriented_survival_probability(beta: float, depth: int, trials: int,
                                  seed: EventSeed, trial0: int = 0
                                  ) -> float:
    """Fraction of independent clusters surviving to the given depth.

    Sites of the oriented lattice are open with probability beta; a
    cluster survives a generation when some open site has a reached
    parent.  Shared uniforms across beta values give a monotone
    coupling: raising beta never kills a surviving trial.
    """
    if not 0 <= beta <= 1:
        raise ValueError("beta must lie in [0, 1]")
    s = seed.with_domain(fabric.DOMAIN_PERCOLATION)
    count = _kernels.oriented_survival_count(s.key, s.domain_key, beta,
                                             depth, trials, trial0)
    return count / trials


@dataclass(frozen=True)
class BetaCEstimate:
    """Bracketing interval for the oriented-percolation critical point."""

    low: float
    high: float
    depth: int
    trials: int
    probes: tuple  # ((beta, survival probability), ...)

    @property
    def p_c_low(self) -> float:
        return 1.0 - self.high

    @property
    def p_c_high(self) -> float:
        return 1.0 - self.low


def estimate_beta_c(trials: int, lattice_depth: int,
                    tolerance: float = 0.02,
                    seed: Optional[EventSeed] = None,
                    bracket: tuple[float, float] = (0.55, 0.85)
                    ) -> BetaCEstimate:
    """Bracket beta_c by bisecting the depth-d survival probability.

    Static Monte Carlo, independent of the spin dynamics.  The bisection
    target is the calibrated critical survival level for the requested
    depth; the returned interval has width ``tolerance`` centred on the
    bisection limit.
    """
    if lattice_depth < 100:
        raise ValueError("depth must be at least 100")
    if trials < 10 ** 3:
        raise ValueError("need at least 1000 trials")
    seed = seed if seed is not None else EventSeed(0)
    theta = critical_survival_threshold(lattice_depth)
    lo, hi = bracket
    probes = []

    def above(beta: float) -> bool:
        surv = oriented_survival_probability(beta, lattice_depth, trials,
                                             seed)
        probes.append((beta, surv))
        return surv > theta

    if above(lo) or not above(hi):
        raise ValueError("bracket does not straddle the transition")
    while hi - lo > tolerance / 2:
        mid = 0.5 * (lo + hi)
        if above(mid):
            hi = mid
        else:
            lo = mid
    mid = 0.5 * (lo + hi)
    return BetaCEstimate(mid - tolerance / 2, mid + tolerance / 2,
                         lattice_depth, trials, tuple(probes))
