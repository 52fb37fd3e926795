"""Measurement drivers built on the simulation engines.

Each driver maps a replicated simulation plan to a statistical summary:
block-pattern mixing against the product measure, single-site
autocorrelation with an exponential fit, ordered window resets and the
tail of their completion time, the never-reset (freeze) fraction, and
the influence-region growth study with its scaled-shape convergence
diagnostic.  Every output is a deterministic function of the plan and
its seed.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from . import fabric, forward
from .fabric import EventSeed
from .lattice import BoundaryRule, Configuration, Region, Site
from .measures import sample_bernoulli

InitialSpec = Union[None, Configuration, Callable[[EventSeed],
                                                  Configuration]]


@dataclass(frozen=True)
class ExperimentPlan:
    """Replicated-run recipe; everything downstream derives from it.

    ``replica_offset`` shifts the replica-seed indices so a plan can be
    split into disjoint chunks that together reproduce the unsplit run.
    """

    p: float
    window: Region
    t_max: float
    sample_times: tuple
    replicas: int
    seed: EventSeed
    boundary: BoundaryRule = BoundaryRule.GHOST_ONES
    replica_offset: int = 0

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError("p must lie strictly between 0 and 1")
        if self.replicas < 1:
            raise ValueError("need at least one replica")
        st = tuple(float(t) for t in self.sample_times)
        if any(t < 0 for t in st) or any(
                b <= a for a, b in zip(st, st[1:])):
            raise ValueError("sample times must be nonnegative and "
                             "strictly increasing")
        if st and st[-1] > self.t_max:
            raise ValueError("sample times must not exceed t_max")
        object.__setattr__(self, "sample_times", st)

    def replica_seeds(self):
        return [fabric.replica_seed(self.seed, self.replica_offset + i)
                for i in range(self.replicas)]

    def split(self, workers: int) -> list["ExperimentPlan"]:
        """Disjoint replica chunks covering this plan, one per worker."""
        workers = max(1, min(workers, self.replicas))
        sizes = [self.replicas // workers
                 + (1 if i < self.replicas % workers else 0)
                 for i in range(workers)]
        plans = []
        offset = self.replica_offset
        for size in sizes:
            plans.append(dataclasses.replace(self, replicas=size,
                                             replica_offset=offset))
            offset += size
        return plans

    def initial_for(self, initial: InitialSpec,
                    seed: EventSeed) -> Configuration:
        """Resolve an initial-condition spec for one replica.

        None draws i.i.d. Bernoulli-p spins from the replica seed; a
        Configuration is used as-is; a callable receives the replica
        seed.
        """
        if initial is None:
            return sample_bernoulli(self.window, self.p, seed,
                                    self.boundary)
        if isinstance(initial, Configuration):
            return initial
        return initial(seed)


# ---------------------------------------------------------------------------
# ordered window resets
# ---------------------------------------------------------------------------


def reset_order(window: Region) -> tuple[Site, ...]:
    """Canonical reset order: decreasing x+y, ties by decreasing y.

    First site is the northeast corner, last the southwest corner, so
    the order sweeps anti-diagonals from northeast to southwest.
    """
    return tuple(sorted(window.sites(),
                        key=lambda s: (-(s.x + s.y), -s.y)))


def _reset_times_by_site(log, order) -> list[np.ndarray]:
    """Chronological reset times at each ordered site; ``log`` is a
    sequence of entries with .site and .time, sorted by time."""
    by_site: dict = {s: [] for s in order}
    for entry in log:
        s = Site(entry.site[0], entry.site[1])
        if s in by_site:
            by_site[s].append(entry.time)
    return [np.asarray(by_site[s]) for s in order]


def detect_lambda_reset(log, window: Region,
                        order: Optional[Sequence[Site]] = None
                        ) -> Optional[float]:
    """First time the window completes an ordered reset sweep.

    Returns the first T such that each ordered site's last reset at or
    before T exists and these last-reset times strictly increase along
    the order, with the final site's equal to T; None when the log ends
    before any such T.  The log must be chronologically sorted; entries
    outside the window are ignored.
    """
    order = tuple(order) if order is not None else reset_order(window)
    if set(order) != set(window.sites()):
        raise ValueError("order must enumerate exactly the window sites")
    per_site = _reset_times_by_site(log, order)
    candidates = per_site[-1]
    if candidates.size == 0 or any(a.size == 0 for a in per_site):
        return None
    last = np.empty((len(order), candidates.size))
    ok = np.ones(candidates.size, bool)
    for k, arr in enumerate(per_site):
        idx = np.searchsorted(arr, candidates, side="right")
        ok &= idx > 0
        last[k] = arr[np.maximum(idx - 1, 0)]
    ok &= np.all(np.diff(last, axis=0) > 0, axis=0)
    hits = np.flatnonzero(ok)
    return float(candidates[hits[0]]) if hits.size else None


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogLinearFit:
    rate: float  # decay rate alpha: fitted y ~ exp(intercept - rate * t)
    intercept: float
    r_squared: float
    used: np.ndarray  # mask of points entering the fit


def fit_log_linear(ts: np.ndarray, ys: np.ndarray,
                   ses: np.ndarray) -> Optional[LogLinearFit]:
    """Weighted least-squares line through log y, restricted to points
    at least three standard errors above zero.

    Weights are inverse variances of log y (delta method); returns None
    when fewer than three points qualify — the caller reports an
    unfittable series rather than fabricating a rate.
    """
    ts = np.asarray(ts, float)
    ys = np.asarray(ys, float)
    ses = np.asarray(ses, float)
    mask = (ses > 0) & (ys > 3 * ses)
    if mask.sum() < 3:
        return None
    t = ts[mask]
    ly = np.log(ys[mask])
    w = (ys[mask] / ses[mask]) ** 2
    intercept, slope = np.polynomial.polynomial.polyfit(
        t, ly, 1, w=np.sqrt(w))
    fitted = intercept + slope * t
    mean = np.average(ly, weights=w)
    ss_res = np.sum(w * (ly - fitted) ** 2)
    ss_tot = np.sum(w * (ly - mean) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return LogLinearFit(-slope, intercept, r2, mask)


# ---------------------------------------------------------------------------
# block mixing
# ---------------------------------------------------------------------------


@dataclass
class BlockMixingResult:
    times: np.ndarray
    tv: np.ndarray                # TV distance to the product law
    noise_floor: float            # mean + 3 sigma of the multinomial null
    counts: np.ndarray            # (times, patterns) pattern histogram
    exact: np.ndarray             # product-measure pattern probabilities
    replicas: int


def _pattern_probabilities(p: float, nsites: int) -> np.ndarray:
    probs = np.ones(1 << nsites)
    for pattern in range(probs.size):
        for i in range(nsites):
            probs[pattern] *= p if (pattern >> i) & 1 else 1 - p
    return probs


def _map_chunks(func, plan: ExperimentPlan, workers: int, *args) -> list:
    """Apply a per-chunk accumulator to disjoint replica chunks,
    in-process for one worker, over a process pool otherwise."""
    chunks = plan.split(workers)
    if len(chunks) == 1:
        return [func(chunks[0], *args)]
    with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
        return list(pool.map(func, chunks, *([a] * len(chunks)
                                             for a in args)))


def _block_mixing_counts(plan: ExperimentPlan, block: Region,
                         initial: InitialSpec) -> np.ndarray:
    sites = list(block.sites())
    weights = 1 << np.arange(len(sites))
    times = np.asarray(plan.sample_times)
    counts = np.zeros((times.size, 1 << len(sites)), np.int64)
    for rs in plan.replica_seeds():
        state = forward.SimulationState(plan.initial_for(initial, rs))
        out = forward.run_until_fast(state, plan.t_max, plan.p, rs,
                                     sample_times=times,
                                     tracked_sites=sites)
        patterns = out["tracked"].astype(np.int64) @ weights
        counts[np.arange(times.size), patterns] += 1
    return counts


def block_mixing(plan: ExperimentPlan, block: Region,
                 initial: InitialSpec = None,
                 null_draws: int = 400,
                 workers: int = 1) -> BlockMixingResult:
    """Empirical law of the block pattern at each sample time, against
    the product Bernoulli-p law in total variation.

    The noise floor is the mean + 3 sigma of the TV distance of a
    multinomial sample of the same size drawn from the product law
    itself, so "mixed" means TV at or below that floor.
    """
    nsites = len(block)
    if nsites > 9:
        raise ValueError("block too large: pattern histogram needs "
                         "|block| <= 9")
    times = np.asarray(plan.sample_times)
    counts = sum(_map_chunks(_block_mixing_counts, plan, workers,
                             block, initial))
    exact = _pattern_probabilities(plan.p, nsites)
    emp = counts / plan.replicas
    tv = 0.5 * np.abs(emp - exact).sum(axis=1)
    rng = np.random.default_rng(int(plan.seed.key) ^ 0x6D6978)
    null = rng.multinomial(plan.replicas, exact,
                           size=null_draws) / plan.replicas
    null_tv = 0.5 * np.abs(null - exact).sum(axis=1)
    floor = float(null_tv.mean() + 3 * null_tv.std())
    return BlockMixingResult(times, tv, floor, counts, exact,
                             plan.replicas)


# ---------------------------------------------------------------------------
# autocorrelation
# ---------------------------------------------------------------------------


@dataclass
class AutocorrelationResult:
    times: np.ndarray
    rho: np.ndarray
    se: np.ndarray
    fit: Optional[LogLinearFit]
    replicas: int


def _autocorrelation_sums(plan: ExperimentPlan, site: Site) -> tuple:
    times = np.asarray(plan.sample_times)
    prod_sum = np.zeros(times.size)
    xit_sum = np.zeros(times.size)
    xi0_sum = 0.0
    for rs in plan.replica_seeds():
        init = sample_bernoulli(plan.window, plan.p, rs, plan.boundary)
        xi0 = init.spin(site)
        state = forward.SimulationState(init)
        out = forward.run_until_fast(state, plan.t_max, plan.p, rs,
                                     sample_times=times,
                                     tracked_sites=[site])
        xit = out["tracked"][:, 0].astype(np.float64)
        prod_sum += xi0 * xit
        xit_sum += xit
        xi0_sum += xi0
    return prod_sum, xit_sum, xi0_sum


def autocorrelation(plan: ExperimentPlan, site: Site,
                    workers: int = 1) -> AutocorrelationResult:
    """Stationary autocorrelation of one site's spin.

    rho(t) = corr(xi_0, xi_t) under a stationary (product Bernoulli-p)
    start, estimated over replicas with empirical centering and
    normalization — so rho(0) = 1 identically — and fitted with the
    standard log-linear decay fit over the significant range.
    """
    times = np.asarray(plan.sample_times)
    parts = _map_chunks(_autocorrelation_sums, plan, workers, site)
    prod_sum = sum(part[0] for part in parts)
    xit_sum = sum(part[1] for part in parts)
    xi0_sum = sum(part[2] for part in parts)
    n = plan.replicas
    m0 = xi0_sum / n
    mt = xit_sum / n
    cov = prod_sum / n - m0 * mt
    scale = np.sqrt(m0 * (1 - m0) * mt * (1 - mt))
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.where(scale > 0, cov / scale, 0.0)
    # classic large-sample standard error of a correlation coefficient
    se = np.maximum((1.0 - rho ** 2) / math.sqrt(n), 1e-12)
    fit_mask = times > 0
    fit = fit_log_linear(times[fit_mask], rho[fit_mask], se[fit_mask])
    return AutocorrelationResult(times, rho, se, fit, n)


# ---------------------------------------------------------------------------
# ordered-reset completion times
# ---------------------------------------------------------------------------


@dataclass
class TauTailResult:
    times: np.ndarray
    survival: np.ndarray
    se: np.ndarray
    taus: np.ndarray          # +inf where never completed
    fit: Optional[LogLinearFit]
    fit_refused: Optional[str]
    replicas: int


def _tau_values(plan: ExperimentPlan, window: Region,
                initial: InitialSpec) -> np.ndarray:
    order = reset_order(window)
    taus = np.full(plan.replicas, np.inf)
    for i, rs in enumerate(plan.replica_seeds()):
        state = forward.SimulationState(plan.initial_for(initial, rs))
        forward.run_until_fast(state, plan.t_max, plan.p, rs,
                               record_log=True)
        tau = detect_lambda_reset(state.reset_log, window, order)
        if tau is not None:
            taus[i] = tau
    return taus


def tau_lambda_tail(plan: ExperimentPlan, window: Region,
                    initial: InitialSpec = None,
                    min_completions: int = 100,
                    workers: int = 1) -> TauTailResult:
    """Empirical survival function of the ordered-reset completion time.

    Replicas run the dynamics with a reset log; each is scanned for the
    first completed northeast-to-southwest reset sweep of ``window``.
    The tail fit is refused (with the curve still reported) when fewer
    than ``min_completions`` replicas complete a sweep.
    """
    times = np.asarray(plan.sample_times)
    taus = np.concatenate(_map_chunks(_tau_values, plan, workers,
                                      window, initial))
    n = plan.replicas
    survival = np.array([(taus >= t).mean() for t in times])
    se = np.sqrt(survival * (1 - survival) / n)
    completed = int(np.isfinite(taus).sum())
    fit = None
    refused = None
    if completed < min_completions:
        refused = (f"only {completed} of {n} replicas completed the "
                   f"sweep; need {min_completions} for a fit")
    else:
        fit = fit_log_linear(times, survival, se)
        if fit is None:
            refused = "no significant tail range to fit"
    return TauTailResult(times, survival, se, taus, fit, refused, n)


# ---------------------------------------------------------------------------
# regeneration
# ---------------------------------------------------------------------------


@dataclass
class RegenerationResult:
    t: float
    p: float
    conditioned: int      # replicas with a reset at the site by time t
    ones: int             # of those, spins at 1 at time t
    replicas: int

    @property
    def fraction(self) -> float:
        return self.ones / self.conditioned if self.conditioned else float(
            "nan")

    @property
    def binomial_sigma(self) -> float:
        if not self.conditioned:
            return float("nan")
        return math.sqrt(self.p * (1 - self.p) / self.conditioned)


def regeneration_check(plan: ExperimentPlan, site: Site,
                       t: float) -> RegenerationResult:
    """Among replicas whose site has reset by time t, the spin at t
    should be a fresh Bernoulli-p draw regardless of history."""
    conditioned = 0
    ones = 0
    iy = site.y - plan.window.origin.y
    ix = site.x - plan.window.origin.x
    for rs in plan.replica_seeds():
        init = sample_bernoulli(plan.window, plan.p, rs, plan.boundary)
        state = forward.SimulationState(init)
        forward.run_until_fast(state, t, plan.p, rs)
        if state.first_reset[iy, ix] <= t:
            conditioned += 1
            ones += int(state.config.spins[iy, ix])
    return RegenerationResult(t, plan.p, conditioned, ones, plan.replicas)


# ---------------------------------------------------------------------------
# freeze fraction
# ---------------------------------------------------------------------------


@dataclass
class FreezeResult:
    times: np.ndarray
    fraction: np.ndarray       # mean never-reset fraction per sample time
    static_density: float      # frozen 0-cluster density of the starts
    replicas: int


def _freeze_sums(plan: ExperimentPlan, initial: InitialSpec) -> tuple:
    from .percolation import frozen_zero_mask
    times = np.asarray(plan.sample_times)
    frac = np.zeros(times.size)
    static = 0.0
    for rs in plan.replica_seeds():
        init = plan.initial_for(initial, rs)
        static += frozen_zero_mask(init).mean()
        state = forward.SimulationState(init)
        for k, t in enumerate(times):
            forward.run_until_fast(state, t, plan.p, rs)
            frac[k] += np.isinf(state.first_reset).mean()
    return frac, static


def freeze_fraction(plan: ExperimentPlan,
                    initial: InitialSpec = None,
                    workers: int = 1) -> FreezeResult:
    """Fraction of window sites never reset, versus time.

    The static reference is the density of the initial configurations'
    SW-edge-attached 0-clusters, which can never reset and hence lower-
    bounds the limiting fraction (up to the finite-window proxy bias).
    """
    times = np.asarray(plan.sample_times)
    parts = _map_chunks(_freeze_sums, plan, workers, initial)
    frac = sum(part[0] for part in parts)
    static = sum(part[1] for part in parts)
    n = plan.replicas
    return FreezeResult(times, frac / n, static / n, n)


# ---------------------------------------------------------------------------
# influence region
# ---------------------------------------------------------------------------


@dataclass
class ShapeSeries:
    """Influence-region snapshots with the scaled-shape diagnostic.

    ``rasters[k]`` is the quadrant mask of sites flipped by
    ``times[k]``; ``hausdorff[k]`` is the Hausdorff distance between the
    1/t-scaled regions at consecutive sample times.  ``query_raster``,
    when computed, marks every site of the padded window consulted by
    backward queries resolving the influenced sites' spins at
    ``query_time``.
    """

    times: list
    rasters: list
    hausdorff: list
    quadrant: Region
    padded: Region
    aborted: bool = False
    abort_reason: Optional[str] = None
    query_raster: Optional[np.ndarray] = None
    query_time: Optional[float] = None
    final_spins: Optional[np.ndarray] = None


def _scaled_hausdorff(mask_a: np.ndarray, t_a: float,
                      mask_b: np.ndarray, t_b: float) -> float:
    """Hausdorff distance between unit-square unions scaled by 1/t,
    via the square centers (the half-cell offsets cancel to O(1/t))."""
    pa = np.argwhere(mask_a)[:, ::-1] + 0.5
    pb = np.argwhere(mask_b)[:, ::-1] + 0.5
    if pa.size == 0 or pb.size == 0:
        return float("nan")
    pa = pa / t_a
    pb = pb / t_b
    d_ab = cKDTree(pb).query(pa)[0].max()
    d_ba = cKDTree(pa).query(pb)[0].max()
    return float(max(d_ab, d_ba))


def padded_quadrant(size: int, margin_fraction: float = 0.25) -> tuple[
        Region, Region]:
    """The quadrant window [0, size)^2 and its SW-padded host window."""
    margin = math.ceil(size * margin_fraction)
    quadrant = Region(Site(0, 0), size, size)
    padded = Region(Site(-margin, -margin), size + margin, size + margin)
    return quadrant, padded


def quadrant_zero_initial(padded: Region, p: float,
                          seed: EventSeed) -> Configuration:
    """Quadrant-1 sites at 0, everything else i.i.d. Bernoulli-p."""
    cfg = sample_bernoulli(padded, p, seed)
    y0 = -padded.origin.y
    x0 = -padded.origin.x
    cfg.spins[y0:, x0:] = 0
    return cfg


def influence_region(plan: ExperimentPlan,
                     compute_queries: bool = False,
                     query_budget: int = 2 * 10 ** 9) -> ShapeSeries:
    """Growth of the influenced region from an all-zero quadrant.

    ``plan.window`` is the quadrant; the dynamics run on a host window
    padded southwest by 25% so the quadrant boundary behaves like the
    infinite plane until influence reaches the padding.  A run that
    touches the window's northeast edge aborts with the results so far.
    With ``compute_queries`` the final snapshot is re-derived through
    the recorded event tables and every site consulted by the backward
    resolution of the influenced sites is marked.
    """
    quadrant = plan.window
    if quadrant.origin != Site(0, 0):
        raise ValueError("the influence window must be the quadrant at "
                         "the origin")
    _, padded = padded_quadrant(quadrant.width)
    seed = plan.seed
    state = forward.SimulationState(
        quadrant_zero_initial(padded, plan.p, seed))
    y0 = -padded.origin.y
    x0 = -padded.origin.x
    series = ShapeSeries([], [], [], quadrant, padded)
    prev = None
    for t in plan.sample_times:
        forward.run_until_fast(state, t, plan.p, seed)
        mask = np.isfinite(
            state.first_flip)[y0:, x0:]
        series.times.append(t)
        series.rasters.append(mask.copy())
        if prev is not None:
            series.hausdorff.append(
                _scaled_hausdorff(prev[0], prev[1], mask, t))
        prev = (mask, t)
        if mask[-1, :].any() or mask[:, -1].any():
            series.aborted = True
            series.abort_reason = (
                f"influence reached the window edge by t={t}; "
                "results retained up to this snapshot")
            break
    series.final_spins = state.config.spins[y0:, x0:].copy()
    if compute_queries and series.times:
        _attach_query_raster(series, plan, padded, query_budget)
    return series


def _attach_query_raster(series: ShapeSeries, plan: ExperimentPlan,
                         padded: Region, budget: int) -> None:
    from . import _kernels
    t = series.times[-1]
    seed = plan.seed
    state = forward.SimulationState(
        quadrant_zero_initial(padded, plan.p, seed))
    out = forward.run_until_fast(state, t, plan.p, seed,
                                 shape_tables=True)
    w, h = padded.width, padded.height
    y0 = -padded.origin.y
    x0 = -padded.origin.x
    mask = series.rasters[-1]
    iy, ix = np.nonzero(mask)
    sids = ((iy + y0) * w + (ix + x0)).astype(np.int64)
    ks = state.next_index.reshape(-1)[sids] - 1
    scanned = np.zeros(out["csr"][-1], np.uint8)
    queried = np.zeros(w * h, np.uint8)
    nodes, status = _kernels.query_replay(
        out["csr"], out["elig"], out["off_s"], out["off_w"], w, h,
        sids, ks, scanned, queried, budget)
    if status != 0:
        raise RuntimeError(f"query replay exhausted its {budget}-node "
                           "budget")
    series.query_raster = queried.reshape(h, w).astype(bool)
    series.query_time = t


def shape_raster_image(series: ShapeSeries) -> np.ndarray:
    """Grayscale composite of the final snapshot on the padded window.

    White: influenced sites; mid gray: queried halo outside the
    influenced set; dark specks: influenced/queried sites still at spin
    0; black: everything else.
    """
    padded = series.padded
    img = np.zeros((padded.height, padded.width), np.uint8)
    y0 = -padded.origin.y
    x0 = -padded.origin.x
    if series.query_raster is not None:
        img[series.query_raster] = 96
    influenced = np.zeros_like(img, bool)
    influenced[y0:, x0:] = series.rasters[-1]
    img[influenced] = 255
    if series.final_spins is not None:
        zeros = np.zeros_like(img, bool)
        zeros[y0:, x0:] = series.final_spins == 0
        marked = influenced | (series.query_raster
                               if series.query_raster is not None
                               else False)
        img[zeros & marked] = 32
    return img
