"""Chronological event-driven simulation of the northeast dynamics.

Two samplers:

* the graphical construction (`step` / `run_until`): every site's clock
  event is consumed in global time order, eligibility is evaluated
  against the configuration strictly before the event time, and the
  reset spin is 1 iff the event's mark is <= p.  This path is a pure
  function of the event fabric, so its trajectories can be checked
  exactly against the backward query engine.
* a rejection-free sampler (`run_rejection_free`): only currently
  eligible sites carry scheduled events.  Equivalent in law for the
  configuration process, but it consumes its own seed domain and its
  opportunity counters only see eligible events.

`run_until_fast` drives the same graphical construction through the
compiled kernel and leaves the state bit-identical to the Python path.
"""

from __future__ import annotations

import heapq
import math
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels, fabric
from ._kernels import B_GHOST_ONES, B_GHOST_ZEROS, B_PERIODIC
from .fabric import EventSeed
from .lattice import (BoundaryRule, Configuration, Site, is_flip_eligible,
                      sw_neighbors)

_BOUNDARY_CODE = {
    BoundaryRule.GHOST_ONES: B_GHOST_ONES,
    BoundaryRule.GHOST_ZEROS: B_GHOST_ZEROS,
    BoundaryRule.PERIODIC: B_PERIODIC,
}


class ResetLogEntry(NamedTuple):
    site: Site
    time: float
    new_spin: int
    old_spin: int


class SimulationState:
    """Configuration plus per-site counters and the engine bookkeeping.

    ``opportunities`` counts clock events consumed at each site (M^x),
    ``resets`` the subset that found the site eligible, ``first_reset``
    the first reset time (tau_x; +inf while none has occurred).
    """

    def __init__(self, config: Configuration):
        if config.boundary not in _BOUNDARY_CODE:
            raise ValueError(
                f"forward engine does not run on {config.boundary} windows")
        self.config = config.copy()
        h, w = config.region.height, config.region.width
        self.clock = 0.0
        self.opportunities = np.zeros((h, w), np.int64)
        self.resets = np.zeros((h, w), np.int64)
        self.first_reset = np.full((h, w), np.inf)
        self.first_flip = np.full((h, w), np.inf)
        self.next_index = np.ones((h, w), np.int64)
        self.tacc = np.zeros((h, w), np.float64)
        self.reset_log: list[ResetLogEntry] = []
        self.rf_counter = 0
        self._heap: Optional[list] = None
        self._heap_seed: Optional[EventSeed] = None

    @property
    def flipped_once(self) -> np.ndarray:
        return np.isfinite(self.first_flip)

    def _site_next_time(self, seed: EventSeed, ix: int, iy: int) -> float:
        r = self.config.region
        return self.tacc[iy, ix] + _kernels.gap_at(
            seed.key, seed.domain_key, r.origin.x + ix, r.origin.y + iy,
            self.next_index[iy, ix])

    def _ensure_heap(self, seed: EventSeed) -> list:
        if self._heap is not None:
            if seed != self._heap_seed:
                raise ValueError("one state must be driven by one seed")
            return self._heap
        r = self.config.region
        heap = []
        for iy in range(r.height):
            for ix in range(r.width):
                heap.append((self._site_next_time(seed, ix, iy), iy, ix))
        heapq.heapify(heap)
        self._heap = heap
        self._heap_seed = seed
        return heap

    def invalidate_engine_cache(self) -> None:
        """Drop the event heap (after out-of-band state mutation)."""
        self._heap = None
        self._heap_seed = None


def step(state: SimulationState, p: float, seed: EventSeed
         ) -> Optional[ResetLogEntry]:
    """Consume the globally earliest unconsumed event.

    Returns the reset log entry if the event found its site eligible,
    else None.  The clock advances to the event time either way.
    """
    if not 0 < p < 1:
        raise ValueError("p must lie strictly between 0 and 1")
    heap = state._ensure_heap(seed)
    te, iy, ix = heapq.heappop(heap)
    r = state.config.region
    s = Site(r.origin.x + ix, r.origin.y + iy)
    j = int(state.next_index[iy, ix])
    state.opportunities[iy, ix] += 1
    entry = None
    if is_flip_eligible(state.config, s):
        mark = fabric.mark_at(seed, s, j)
        old = state.config.spin(s)
        new = 1 if mark <= p else 0
        state.resets[iy, ix] += 1
        if not math.isfinite(state.first_reset[iy, ix]):
            state.first_reset[iy, ix] = te
        if new != old:
            state.config.set_spin(s, new)
            if not math.isfinite(state.first_flip[iy, ix]):
                state.first_flip[iy, ix] = te
        entry = ResetLogEntry(s, te, new, old)
        state.reset_log.append(entry)
    state.tacc[iy, ix] = te
    state.next_index[iy, ix] = j + 1
    heapq.heappush(heap, (state._site_next_time(seed, ix, iy), iy, ix))
    state.clock = te
    return entry


def run_until(state: SimulationState, t: float, p: float,
              seed: EventSeed) -> SimulationState:
    """Consume every event with time <= t, in global chronological order."""
    if t < state.clock:
        raise ValueError("cannot run backwards")
    heap = state._ensure_heap(seed)
    while heap[0][0] <= t:
        step(state, p, seed)
    state.clock = t
    return state


def run_until_fast(state: SimulationState, t: float, p: float,
                   seed: EventSeed,
                   sample_times=None, tracked_sites=None,
                   record_log: bool = False,
                   shape_tables: bool = False):
    """Kernel-compiled `run_until`; mutates the state exactly as the
    Python path would.

    sample_times must be >= the current clock and <= t; tracked spins are
    recorded at each (post-event, right-continuous) sample time.

    Returns a dict with keys 'tracked' (S, K) int8, 'log' (structured
    array), and with shape_tables the per-event replay tables
    ('csr', 'elig', 'off_s', 'off_w').
    """
    if not 0 < p < 1:
        raise ValueError("p must lie strictly between 0 and 1")
    if t < state.clock:
        raise ValueError("cannot run backwards")
    r = state.config.region
    w, h = r.width, r.height
    boundary = _BOUNDARY_CODE[state.config.boundary]
    stimes = np.asarray([] if sample_times is None else sample_times,
                        np.float64)
    if stimes.size and (np.any(np.diff(stimes) < 0)
                        or stimes[0] < state.clock or stimes[-1] > t):
        raise ValueError("sample times must be increasing within (clock, t]")
    tracked = np.asarray(
        [r.index(s) for s in (tracked_sites or [])], np.int64)
    tracked_out = np.zeros((stimes.size, tracked.size), np.int8)

    spins = state.config.spins.reshape(-1)
    opportunities = state.opportunities.reshape(-1)
    resets = state.resets.reshape(-1)
    first_reset = state.first_reset.reshape(-1)
    first_flip = state.first_flip.reshape(-1)
    next_index = state.next_index.reshape(-1)
    tacc = state.tacc.reshape(-1)

    if shape_tables:
        counts = _kernels.count_events(seed.key, seed.domain_key, w, h,
                                       r.origin.x, r.origin.y, t)
        csr = np.zeros(w * h + 1, np.int64)
        np.cumsum(counts, out=csr[1:])
        nev = int(csr[-1])
        elig = np.zeros(nev, np.uint8)
        off_s = np.zeros(nev, np.int16)
        off_w = np.zeros(nev, np.int16)
    else:
        csr = np.zeros(0, np.int64)
        elig = np.zeros(0, np.uint8)
        off_s = np.zeros(0, np.int16)
        off_w = np.zeros(0, np.int16)

    cap = 0
    if record_log:
        expected = w * h * (t - state.clock)
        cap = int(expected + 6.0 * math.sqrt(expected + 1.0) + 64)
    while True:
        log_time = np.empty(cap, np.float64)
        log_site = np.empty(cap, np.int32)
        log_old = np.empty(cap, np.int8)
        log_new = np.empty(cap, np.int8)
        snapshot = (spins.copy(), opportunities.copy(), resets.copy(),
                    first_reset.copy(), first_flip.copy(),
                    next_index.copy(), tacc.copy())
        nlog, status = _kernels.run_forward(
            seed.key, seed.domain_key, p, w, h, r.origin.x, r.origin.y,
            boundary, spins, t,
            opportunities, resets, first_reset, first_flip,
            next_index, tacc,
            stimes, tracked, tracked_out,
            log_time, log_site, log_old, log_new,
            csr, elig, off_s, off_w)
        if status == _kernels.STATUS_OK:
            break
        # restore and retry with more room
        for dst, src in zip((spins, opportunities, resets, first_reset,
                             first_flip, next_index, tacc), snapshot):
            dst[:] = src
        if status == _kernels.STATUS_LOG_OVERFLOW:
            cap = max(2 * cap, 1024)
        else:  # pragma: no cover - counts are exact, overflow is a bug
            raise RuntimeError("shape table overflow")

    state.clock = t
    state._heap = None  # heap rebuilt lazily if the Python path resumes
    state._heap_seed = seed
    out = {
        "tracked": tracked_out,
        "log": {
            "time": log_time[:nlog].copy(),
            "site": log_site[:nlog].copy(),
            "old": log_old[:nlog].copy(),
            "new": log_new[:nlog].copy(),
        } if record_log else None,
    }
    if record_log:
        for i in range(nlog):
            state.reset_log.append(ResetLogEntry(
                r.site(int(log_site[i])), float(log_time[i]),
                int(log_new[i]), int(log_old[i])))
    if shape_tables:
        out.update(csr=csr, elig=elig, off_s=off_s, off_w=off_w)
    return out


def run_rejection_free(state: SimulationState, t: float, p: float,
                       seed: EventSeed) -> SimulationState:
    """Advance to time t scheduling events at eligible sites only.

    Equal in law to `run_until` for the configuration process (not
    pathwise: it draws from its own seed domain, normally
    `fabric.DOMAIN_REJECTION`).  Opportunity counters advance only at
    eligible sites here.
    """
    if not 0 < p < 1:
        raise ValueError("p must lie strictly between 0 and 1")
    if t < state.clock:
        raise ValueError("cannot run backwards")
    cfg = state.config
    r = cfg.region
    w, h = r.width, r.height

    eligible = []
    pos = np.full(w * h, -1, np.int64)
    for iy in range(h):
        for ix in range(w):
            if is_flip_eligible(cfg, Site(r.origin.x + ix, r.origin.y + iy)):
                pos[iy * w + ix] = len(eligible)
                eligible.append(iy * w + ix)

    def update_site(sid: int) -> None:
        iy, ix = divmod(sid, w)
        ok = is_flip_eligible(cfg, Site(r.origin.x + ix, r.origin.y + iy))
        if ok and pos[sid] < 0:
            pos[sid] = len(eligible)
            eligible.append(sid)
        elif not ok and pos[sid] >= 0:
            i = pos[sid]
            last = eligible.pop()
            if last != sid:
                eligible[i] = last
                pos[last] = i
            pos[sid] = -1

    def draw() -> float:
        state.rf_counter += 1
        return _kernels.uniform_at(seed.key, seed.domain_key, 0, 0, 0,
                                   state.rf_counter)

    clock = state.clock
    while eligible:
        k = len(eligible)
        dt = -math.log(draw()) / k
        if clock + dt > t:
            break
        clock += dt
        sid = eligible[min(int(draw() * k), k - 1)]
        iy, ix = divmod(sid, w)
        s = Site(r.origin.x + ix, r.origin.y + iy)
        old = cfg.spin(s)
        new = 1 if draw() <= p else 0
        state.opportunities[iy, ix] += 1
        state.resets[iy, ix] += 1
        if not math.isfinite(state.first_reset[iy, ix]):
            state.first_reset[iy, ix] = clock
        if new != old:
            cfg.set_spin(s, new)
            if not math.isfinite(state.first_flip[iy, ix]):
                state.first_flip[iy, ix] = clock
            state.reset_log.append(ResetLogEntry(s, clock, new, old))
            # a flip at s can change eligibility only of its N and E neighbors
            for dx, dy in ((0, 1), (1, 0)):
                nx, ny = ix + dx, iy + dy
                if cfg.boundary is BoundaryRule.PERIODIC:
                    nx %= w
                    ny %= h
                if 0 <= nx < w and 0 <= ny < h:
                    update_site(ny * w + nx)
        else:
            state.reset_log.append(ResetLogEntry(s, clock, new, old))
    state.clock = t
    state.invalidate_engine_cache()
    return state


def reset_time_report(state: SimulationState) -> np.ndarray:
    """Per-site (site, tau_x, M^x, resets) snapshot.

    Sites never reset carry tau = +inf.
    """
    r = state.config.region
    out = np.zeros(len(r), dtype=[("x", np.int64), ("y", np.int64),
                                  ("tau", np.float64),
                                  ("opportunities", np.int64),
                                  ("resets", np.int64)])
    for flat, s in enumerate(r.sites()):
        iy, ix = divmod(flat, r.width)
        out[flat] = (s.x, s.y, state.first_reset[iy, ix],
                     state.opportunities[iy, ix], state.resets[iy, ix])
    return out
