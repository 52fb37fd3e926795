import numpy as np
import pytest

from northeast import experiments, forward, measures
from northeast.experiments import (ExperimentPlan, autocorrelation,
                                   block_mixing, detect_lambda_reset,
                                   fit_log_linear, freeze_fraction,
                                   influence_region, padded_quadrant,
                                   regeneration_check, reset_order,
                                   shape_raster_image, tau_lambda_tail)
from northeast.fabric import EventSeed
from northeast.forward import ResetLogEntry
from northeast.lattice import Configuration, Region, Site


def _plan(**kw):
    defaults = dict(p=0.8, window=Region(Site(0, 0), 8, 8), t_max=10.0,
                    sample_times=(1.0, 5.0, 10.0), replicas=50,
                    seed=EventSeed(1))
    defaults.update(kw)
    return ExperimentPlan(**defaults)


def test_plan_validation():
    with pytest.raises(ValueError):
        _plan(p=1.2)
    with pytest.raises(ValueError):
        _plan(sample_times=(5.0, 1.0))
    with pytest.raises(ValueError):
        _plan(sample_times=(5.0, 20.0))
    with pytest.raises(ValueError):
        _plan(replicas=0)


def test_plan_split_covers_all_replicas():
    plan = _plan(replicas=10)
    chunks = plan.split(3)
    assert sum(c.replicas for c in chunks) == 10
    seeds = [s for c in chunks for s in c.replica_seeds()]
    assert [s.master_seed for s in seeds] == \
        [s.master_seed for s in plan.replica_seeds()]


def test_reset_order_3x3_matrix():
    order = reset_order(Region(Site(0, 0), 3, 3))
    rank = np.zeros((3, 3), np.int64)
    for k, s in enumerate(order, start=1):
        rank[2 - s.y, s.x] = k  # row 0 of the matrix = north row
    expected = np.array([[4, 2, 1],
                         [7, 5, 3],
                         [9, 8, 6]])
    assert np.array_equal(rank, expected)


def _entries(seq):
    return [ResetLogEntry(Site(x, y), t, 1, 0) for x, y, t in seq]


def test_detect_lambda_reset_positive_and_negative():
    window = Region(Site(0, 0), 2, 2)
    order = reset_order(window)  # (1,1), (0,1), (1,0), (0,0)
    good = _entries([(1, 1, 1.0), (0, 1, 2.0), (1, 0, 3.0), (0, 0, 4.0)])
    assert detect_lambda_reset(good, window) == 4.0
    # same times but visiting sites in the wrong order: no ordered sweep
    bad = _entries([(0, 0, 1.0), (1, 0, 2.0), (0, 1, 3.0), (1, 1, 4.0)])
    assert detect_lambda_reset(bad, window) is None
    # a site missing entirely
    partial = _entries([(1, 1, 1.0), (0, 1, 2.0), (1, 0, 3.0)])
    assert detect_lambda_reset(partial, window) is None


def test_detect_lambda_reset_uses_last_reset_before_t():
    window = Region(Site(0, 0), 2, 2)
    # early garbage, then a clean ordered sweep; earlier resets of the
    # same sites are superseded by their last reset at or before T
    log = _entries([(0, 0, 0.5), (1, 1, 1.0), (0, 1, 2.0),
                    (1, 0, 3.0), (0, 0, 4.0)])
    assert detect_lambda_reset(log, window) == 4.0


def test_fit_log_linear_recovers_synthetic_rate():
    ts = np.linspace(0.0, 10.0, 30)
    ys = 0.9 * np.exp(-0.35 * ts)
    ses = np.full_like(ts, 1e-4)
    fit = fit_log_linear(ts, ys, ses)
    assert fit.rate == pytest.approx(0.35, abs=1e-3)
    assert fit.r_squared > 0.999
    # refuses when too few significant points remain
    assert fit_log_linear(ts[:2], ys[:2], ses[:2]) is None
    weak = fit_log_linear(ts, ys, np.full_like(ts, 10.0))
    assert weak is None


def test_block_mixing_stationary_start_stays_at_floor():
    plan = _plan(window=Region(Site(0, 0), 10, 10), replicas=400,
                 t_max=5.0, sample_times=(1.0, 5.0))
    block = Region(Site(4, 4), 2, 2)
    res = block_mixing(plan, block)
    assert res.counts.sum(axis=1).tolist() == [400, 400]
    assert res.noise_floor > 0
    # stationary start: the block law is the product law at all times
    assert np.all(res.tv <= res.noise_floor)


def test_block_mixing_workers_bit_identical():
    plan = _plan(window=Region(Site(0, 0), 6, 6), replicas=60,
                 t_max=3.0, sample_times=(3.0,))
    block = Region(Site(2, 2), 2, 2)
    a = block_mixing(plan, block, workers=1)
    b = block_mixing(plan, block, workers=3)
    assert np.array_equal(a.counts, b.counts)
    assert a.noise_floor == b.noise_floor


def test_autocorrelation_rho0_and_decay():
    plan = _plan(window=Region(Site(0, 0), 10, 10), replicas=600,
                 t_max=6.0, sample_times=(0.0, 1.0, 2.0, 4.0, 6.0))
    res = autocorrelation(plan, Site(5, 5))
    assert res.rho[0] == pytest.approx(1.0)
    assert res.rho[1] < 1.0
    assert res.rho[-1] < res.rho[1]
    assert np.all(res.se >= 0)


def test_tau_lambda_tail_completes_on_tiny_window():
    window = Region(Site(0, 0), 2, 2)
    plan = ExperimentPlan(0.8, window, 400.0,
                          tuple(np.arange(2.0, 42.0, 2.0)), 400,
                          EventSeed(3))
    res = tau_lambda_tail(plan, window)
    done = np.isfinite(res.taus)
    assert done.mean() > 0.9
    assert res.fit is not None and res.fit.rate > 0
    # survival decreases
    assert res.survival[0] >= res.survival[-1]


def test_regeneration_matches_p():
    plan = _plan(window=Region(Site(0, 0), 6, 6), replicas=800,
                 t_max=10.0, sample_times=())
    res = regeneration_check(plan, Site(3, 3), 10.0)
    assert res.conditioned > 0.8 * plan.replicas
    assert abs(res.fraction - plan.p) < 4 * res.binomial_sigma


def test_freeze_fraction_low_p_stays_frozen():
    plan = ExperimentPlan(0.2, Region(Site(0, 0), 24, 24), 60.0,
                          (20.0, 60.0), 40, EventSeed(4))
    res = freeze_fraction(plan)
    assert 0 < res.static_density < 1
    # never-reset fraction dominates the statically frozen cluster
    assert np.all(res.fraction >= res.static_density - 0.05)
    # and can only shrink over time
    assert res.fraction[1] <= res.fraction[0] + 1e-12


def test_padded_quadrant_margin():
    quadrant, padded = padded_quadrant(40)
    assert quadrant == Region(Site(0, 0), 40, 40)
    assert padded.origin == Site(-10, -10)
    assert padded.width == padded.height == 50


def test_influence_region_monotone_growth():
    plan = ExperimentPlan(0.8, Region(Site(0, 0), 48, 48), 30.0,
                          (10.0, 20.0, 30.0), 1, EventSeed(7))
    res = influence_region(plan, compute_queries=True)
    assert not res.aborted
    sizes = [int(m.sum()) for m in res.rasters]
    assert sizes == sorted(sizes)
    assert sizes[-1] > 0
    # rasters are nested: influence never un-happens
    for a, b in zip(res.rasters, res.rasters[1:]):
        assert np.all(b[a])
    # the query halo covers the influenced region and reaches beyond it
    assert res.query_raster is not None
    assert int(res.query_raster.sum()) >= sizes[-1]
    image = shape_raster_image(res)
    assert set(np.unique(image)) <= {0, 32, 96, 255}


def test_influence_region_rejects_non_quadrant():
    plan = ExperimentPlan(0.8, Region(Site(3, 0), 8, 8), 5.0, (5.0,),
                          1, EventSeed(1))
    with pytest.raises(ValueError):
        influence_region(plan)


def test_tau_workers_bit_identical():
    window = Region(Site(0, 0), 2, 2)
    plan = ExperimentPlan(0.8, window, 100.0, (5.0, 20.0, 50.0), 60,
                          EventSeed(3))
    a = tau_lambda_tail(plan, window, workers=1)
    b = tau_lambda_tail(plan, window, workers=3)
    assert np.array_equal(a.taus, b.taus)
