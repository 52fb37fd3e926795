import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from northeast import fabric
from northeast.fabric import EventSeed, replica_seed
from northeast.lattice import Region, Site

SEED = EventSeed(20240901)


def test_seed_domains():
    assert SEED.domain == fabric.DOMAIN_DYNAMICS
    other = SEED.with_domain(fabric.DOMAIN_REJECTION)
    assert other.master_seed == SEED.master_seed
    assert other.domain_key != SEED.domain_key
    # domain hashes are stable across calls
    assert fabric.domain_hash("dynamics") == fabric.domain_hash("dynamics")


def test_events_are_pure_functions():
    e1 = fabric.event_at(SEED, Site(7, -3), 5)
    e2 = fabric.event_at(SEED, Site(7, -3), 5)
    assert e1 == e2
    assert e1.index == 5 and e1.site == Site(7, -3)
    assert 0 < e1.mark < 1 and e1.time > 0
    with pytest.raises(ValueError):
        fabric.event_at(SEED, Site(0, 0), 0)


def test_event_times_strictly_increase():
    for site in (Site(0, 0), Site(-11, 40)):
        times = fabric.event_times_upto(SEED, site, 200.0)
        assert np.all(np.diff(times) > 0)
        assert times[-1] <= 200.0
        # the enumeration agrees with the scalar accessor
        for k in (1, len(times)):
            assert fabric.event_time_at(SEED, site, k) == times[k - 1]


def test_events_in_window_and_last_event():
    site = Site(2, 3)
    all_events = fabric.events_in_window(SEED, site, 0.0, 50.0)
    mid = fabric.events_in_window(SEED, site, 10.0, 50.0)
    assert [e for e in all_events if e.time > 10.0] == mid
    last = fabric.last_event_before(SEED, site, 50.0)
    assert last == all_events[-1]
    assert fabric.last_event_before(SEED, site, 1e-9) is None
    with pytest.raises(ValueError):
        fabric.events_in_window(SEED, site, 5.0, 1.0)


def test_poisson_clock_statistics():
    # pooled inter-arrival gaps over many sites are exponential(1)
    gaps = []
    counts = []
    for i in range(400):
        times = fabric.event_times_upto(SEED, Site(i % 20, i // 20), 50.0)
        counts.append(len(times))
        gaps.append(np.diff(times))
    gaps = np.concatenate(gaps)
    d, pval = stats.kstest(gaps, "expon")
    assert pval > 1e-3, (d, pval)
    # counts over [0, 50] are Poisson(50): check mean and variance
    counts = np.asarray(counts, float)
    assert abs(counts.mean() - 50.0) < 4 * np.sqrt(50.0 / len(counts))
    assert abs(counts.var() / 50.0 - 1.0) < 0.15


def test_uniform_grid_statistics_and_independence():
    region = Region(Site(-100, -100), 1000, 1000)
    u = fabric.uniform_grid(SEED, region)
    assert u.shape == (1000, 1000)
    assert 0 < u.min() and u.max() < 1
    d, pval = stats.kstest(u.reshape(-1), "uniform")
    assert pval > 1e-3, (d, pval)
    # neighbor correlation across sites is null
    flat = u.reshape(-1)
    corr = np.corrcoef(flat[:-1], flat[1:])[0, 1]
    assert abs(corr) < 0.005
    # different kinds give unrelated fields
    marks = fabric.uniform_grid(SEED, region, kind=fabric.KIND_MARK)
    assert abs(np.corrcoef(flat, marks.reshape(-1))[0, 1]) < 0.005


def test_uniform_grid_matches_scalar_path():
    region = Region(Site(3, -7), 5, 4)
    grid = fabric.uniform_grid(SEED, region, kind=fabric.KIND_MARK,
                               index=9)
    for s in region.sites():
        iy, ix = s.y - region.origin.y, s.x - region.origin.x
        assert grid[iy, ix] == fabric.mark_at(SEED, s, 9)


def test_bernoulli_field():
    region = Region(Site(0, 0), 500, 500)
    f = fabric.bernoulli_field(SEED, region, 0.8)
    assert set(np.unique(f)) <= {0, 1}
    assert abs(f.mean() - 0.8) < 0.005
    assert np.array_equal(f, fabric.bernoulli_field(SEED, region, 0.8))


def test_replica_seeds_are_distinct_and_deterministic():
    seeds = [replica_seed(SEED, i).master_seed for i in range(1000)]
    assert len(set(seeds)) == 1000
    assert seeds[17] == replica_seed(SEED, 17).master_seed
    assert replica_seed(SEED, 0).domain == SEED.domain


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(-10**6, 10**6),
       st.integers(-10**6, 10**6), st.integers(1, 10**6))
def test_determinism_under_arbitrary_keys(master, x, y, index):
    seed = EventSeed(master)
    site = Site(x, y)
    m1 = fabric.mark_at(seed, site, index)
    t1 = fabric.event_time_at(seed, site, index)
    assert m1 == fabric.mark_at(seed, site, index)
    assert t1 == fabric.event_time_at(seed, site, index)
    assert 0 < m1 < 1 and t1 > 0
