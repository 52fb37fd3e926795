import numpy as np
import pytest

from northeast import measures
from northeast.fabric import EventSeed
from northeast.lattice import BoundaryRule, Region, Site
from northeast.measures import (ExactChain, GammaSet, build_gamma_grid,
                                collar_mask, draw_mixture_offset,
                                exact_stationary, lambda_gamma_initial,
                                sample_bernoulli, sample_lambda_gamma,
                                sample_mixture_mu, validate_gamma)


def test_sample_bernoulli_determinism_and_density():
    region = Region(Site(0, 0), 200, 200)
    a = sample_bernoulli(region, 0.8, EventSeed(1))
    b = sample_bernoulli(region, 0.8, EventSeed(1))
    assert a == b
    assert abs(a.spins.mean() - 0.8) < 0.01
    c = sample_bernoulli(region, 0.8, EventSeed(2))
    assert not np.array_equal(a.spins, c.spins)


def test_gamma_grid_structure_and_validation():
    window = Region(Site(0, 0), 12, 12)
    g = build_gamma_grid(3, Site(0, 0), window)
    report = validate_gamma(g, window)
    assert report.ok, report
    mask = g.mask(window)
    # a period-m grid hits every m-th row and column entirely
    assert mask[0].all() and mask[:, 0].all()
    assert not mask[1, 1]
    with pytest.raises(ValueError):
        build_gamma_grid(1, Site(0, 0), window)


def test_gamma_explicit_invalid_set_is_rejected():
    window = Region(Site(0, 0), 6, 6)
    # an isolated interior 0 is not self-sustaining: its own southwest
    # neighbors are not in the set, so the frozen-set condition fails
    g = GammaSet(explicit=frozenset({Site(3, 3)}))
    report = validate_gamma(g, window)
    assert not report.ok


def test_lambda_gamma_sample_freezes_gamma():
    window = Region(Site(0, 0), 9, 9)
    g = build_gamma_grid(3, Site(0, 0), window)
    cfg = sample_lambda_gamma(g, 0.8, window, EventSeed(4))
    mask = g.mask(window)
    assert np.all(cfg.spins[mask] == 0)
    collar = collar_mask(g, window)
    assert np.all(cfg.spins[collar] == 1)
    init = lambda_gamma_initial(g, window)
    assert np.all(init.spins[mask] == 0)


def test_mixture_offset_and_sample():
    offs = {draw_mixture_offset(4, EventSeed(s)) for s in range(200)}
    assert all(0 <= o.x < 4 and 0 <= o.y < 4 for o in offs)
    assert len(offs) > 8  # offsets actually vary with the seed
    assert draw_mixture_offset(4, EventSeed(3)) == draw_mixture_offset(
        4, EventSeed(3))
    window = Region(Site(0, 0), 8, 8)
    cfg = sample_mixture_mu(4, 0.8, window, EventSeed(3))
    assert cfg.spins.shape == (8, 8)


def test_exact_chain_product_stationarity():
    for shape in ((1, 1), (2, 1), (2, 2)):
        region = Region(Site(0, 0), *shape)
        for p in (0.3, 0.5, 0.8):
            chain = ExactChain(region, p)
            res = exact_stationary(chain)
            assert np.max(np.abs(res.pi - chain.product_measure())) \
                < 1e-12
            assert res.detailed_balance_violation < 1e-12
            assert res.closed_classes is None


def test_exact_chain_ghost_zeros_is_reducible():
    chain = ExactChain(Region(Site(0, 0), 2, 2), 0.5,
                       boundary=BoundaryRule.GHOST_ZEROS)
    res = exact_stationary(chain)
    # only the northeast corner can ever flip (when its two interior
    # neighbors are 1): 12 absorbing singletons plus 2 toggle pairs
    assert res.pi is None
    assert len(res.closed_classes) == 14


def test_exact_chain_size_limit():
    with pytest.raises(ValueError):
        ExactChain(Region(Site(0, 0), 5, 4), 0.5)


def test_exact_chain_matches_simulated_occupation():
    from northeast import forward
    region = Region(Site(0, 0), 2, 1)
    p = 0.6
    seed = EventSeed(2)
    init = sample_bernoulli(region, p, seed)
    state = forward.SimulationState(init)
    times = tuple(np.arange(20.0, 20020.0, 10.0))
    out = forward.run_until_fast(state, times[-1], p, seed,
                                 sample_times=times,
                                 tracked_sites=list(region.sites()))
    patterns = out["tracked"].astype(np.int64) @ (1 << np.arange(2))
    emp = np.bincount(patterns, minlength=4) / len(times)
    chain = ExactChain(region, p)
    assert np.max(np.abs(emp - chain.product_measure())) < 0.02
