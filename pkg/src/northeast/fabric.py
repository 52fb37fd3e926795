"""Deterministic marked Poisson event fabric.

One rate-1 Poisson clock per lattice site, each occurrence carrying a
uniform-(0,1) mark.  Events are generated counter-style from
(master seed, stream domain, site, index), so any event can be
regenerated in any order, on any engine, with identical bits: this is
what lets the forward and backward engines be compared exactly.

Gaps and marks live in disjoint counter subspaces.  Inter-arrival gaps
are exponential(1) via inverse CDF of the uniform output.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels
from ._kernels import KIND_GAP, KIND_MARK
from .lattice import Region, Site

DOMAIN_DYNAMICS = "dynamics"
DOMAIN_REJECTION = "rejection-free"
DOMAIN_INIT = "init"
DOMAIN_REPLICA = "replica"
DOMAIN_PERCOLATION = "percolation"


@lru_cache(maxsize=None)
def domain_hash(domain: str) -> np.uint64:
    """Stable 64-bit hash of a stream-domain label."""
    digest = hashlib.sha256(domain.encode("utf-8")).digest()
    return np.uint64(int.from_bytes(digest[:8], "little"))


@dataclass(frozen=True)
class EventSeed:
    """Master seed plus the stream domain it feeds.

    Identical seeds yield identical event streams at every site, in any
    query order.
    """

    master_seed: int
    domain: str = DOMAIN_DYNAMICS

    @property
    def key(self) -> np.uint64:
        return np.uint64(self.master_seed & 0xFFFFFFFFFFFFFFFF)

    @property
    def domain_key(self) -> np.uint64:
        return domain_hash(self.domain)

    def with_domain(self, domain: str) -> "EventSeed":
        return EventSeed(self.master_seed, domain)


class SiteEvent(NamedTuple):
    site: Site
    index: int  # chronological rank at this site, 1-based
    time: float
    mark: float


def replica_seed(seed: EventSeed, replica: int) -> EventSeed:
    """Independent per-replica master seed derived from the base seed."""
    h = _kernels.counter_u64(seed.key, domain_hash(DOMAIN_REPLICA),
                             replica, 0, 0, 0)
    return EventSeed(int(h), seed.domain)


def mark_at(seed: EventSeed, site, index: int) -> float:
    """Uniform mark attached to the index-th occurrence at a site."""
    return _kernels.mark_at_(seed.key, seed.domain_key,
                             site[0], site[1], index)


def event_time_at(seed: EventSeed, site, index: int) -> float:
    return _kernels.site_event_time_at(seed.key, seed.domain_key,
                                       site[0], site[1], index)


def event_at(seed: EventSeed, site, index: int) -> SiteEvent:
    """The index-th event at a site; pure function of its arguments."""
    if index < 1:
        raise ValueError("event index is 1-based")
    site = Site(site[0], site[1])
    return SiteEvent(site, index, event_time_at(seed, site, index),
                     mark_at(seed, site, index))


def event_times_upto(seed: EventSeed, site, t: float) -> np.ndarray:
    """Strictly increasing times of all events with time <= t at a site."""
    return _kernels.site_event_times(seed.key, seed.domain_key,
                                     site[0], site[1], t)


def events_in_window(seed: EventSeed, site, t0: float,
                     t1: float) -> list[SiteEvent]:
    """Events with t0 < time <= t1 at a site, in increasing time order."""
    if not 0 <= t0 <= t1:
        raise ValueError("need 0 <= t0 <= t1")
    site = Site(site[0], site[1])
    times = event_times_upto(seed, site, t1)
    out = []
    for idx0, t in enumerate(times):
        if t > t0:
            out.append(SiteEvent(site, idx0 + 1, float(t),
                                 mark_at(seed, site, idx0 + 1)))
    return out


def last_event_before(seed: EventSeed, site,
                      t: float) -> Optional[SiteEvent]:
    """The maximal-time event with time <= t, or None if there is none."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    site = Site(site[0], site[1])
    times = event_times_upto(seed, site, t)
    if len(times) == 0:
        return None
    idx = len(times)
    return SiteEvent(site, idx, float(times[-1]), mark_at(seed, site, idx))


def uniform_grid(seed: EventSeed, region: Region, kind: int = KIND_GAP,
                 index: int = 1) -> np.ndarray:
    """Vectorized uniforms for every site of a region (height, width)."""
    xs = np.arange(region.origin.x, region.origin.x + region.width)
    ys = np.arange(region.origin.y, region.origin.y + region.height)
    gx, gy = np.meshgrid(xs, ys)
    return _kernels.uniform_np(seed.key, seed.domain_key, gx, gy, kind, index)


def bernoulli_field(seed: EventSeed, region: Region, p: float) -> np.ndarray:
    """Deterministic i.i.d. Bernoulli-p spins on a region (height, width)."""
    u = uniform_grid(seed, region, kind=KIND_GAP, index=1)
    return (u <= p).astype(np.int8)
