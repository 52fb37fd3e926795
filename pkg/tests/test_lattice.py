import numpy as np
import pytest

from northeast.lattice import (BoundaryRule, Configuration, Region, Site,
                               cone_sets, is_flip_eligible, read_pgm,
                               sw_exterior_boundary, sw_neighbors,
                               write_pgm, write_pgm_gray)


def test_site_arithmetic():
    s = Site(3, -2)
    assert s + (1, 1) == Site(4, -1)
    assert sw_neighbors(s) == (Site(3, -3), Site(2, -2))


def test_region_membership_and_indexing():
    r = Region(Site(-2, 5), 4, 3)
    assert len(r) == 12
    sites = list(r.sites())
    assert sites[0] == Site(-2, 5)          # southwest corner first
    assert sites[-1] == Site(1, 7)
    for flat, s in enumerate(sites):
        assert s in r
        assert r.index(s) == flat
        assert r.site(flat) == s
    assert Site(-3, 5) not in r
    with pytest.raises(ValueError):
        r.index(Site(2, 5))
    with pytest.raises(ValueError):
        Region(Site(0, 0), 0, 3)


def test_sw_exterior_boundary():
    r = Region(Site(0, 0), 2, 2)
    assert sw_exterior_boundary(r) == {
        Site(0, -1), Site(1, -1), Site(-1, 0), Site(-1, 1)}


def test_cone_sets():
    r = Region(Site(0, 0), 3, 3)
    below, unaffected = cone_sets(Site(1, 1), r)
    assert below == {Site(0, 0), Site(1, 0), Site(0, 1), Site(1, 1)}
    # sites not northeast of (1,1) cannot be influenced by it
    assert Site(0, 2) in unaffected and Site(2, 0) in unaffected
    assert Site(2, 2) not in unaffected and Site(1, 1) not in unaffected
    with pytest.raises(ValueError):
        cone_sets(Site(9, 9), r)


def test_boundary_rules():
    r = Region(Site(0, 0), 2, 2)
    spins = np.array([[1, 0], [0, 1]], np.int8)
    ones = Configuration(r, spins, BoundaryRule.GHOST_ONES)
    zeros = Configuration(r, spins, BoundaryRule.GHOST_ZEROS)
    per = Configuration(r, spins, BoundaryRule.PERIODIC)
    outside = Site(-1, 0)
    assert ones.spin(outside) == 1
    assert zeros.spin(outside) == 0
    assert per.spin(outside) == per.spin(Site(1, 0))
    assert per.spin(Site(2, 3)) == per.spin(Site(0, 1))
    half = Configuration(r, spins, BoundaryRule.HALF_PLANE)
    with pytest.raises(ValueError):
        half.spin(outside)
    half.exterior = lambda s: 1
    assert half.spin(outside) == 1


def test_configuration_validation_and_equality():
    r = Region(Site(0, 0), 2, 2)
    with pytest.raises(ValueError):
        Configuration(r, np.array([[2, 0], [0, 1]]))
    with pytest.raises(ValueError):
        Configuration(r, np.zeros((3, 2)))
    a = Configuration(r, np.eye(2, dtype=np.int8))
    b = a.copy()
    assert a == b
    b.set_spin(Site(0, 1), 1)
    assert a != b
    assert a.spins[1, 0] == 0  # copy did not alias


def test_flip_eligibility():
    r = Region(Site(0, 0), 2, 2)
    c = Configuration(r, np.array([[1, 0], [0, 1]], np.int8),
                      BoundaryRule.GHOST_ONES)
    # southwest corner: both neighbors are ghost 1s
    assert is_flip_eligible(c, Site(0, 0))
    # (1,1): south spin is 0 (spins[0,1]), so blocked
    assert not is_flip_eligible(c, Site(1, 1))
    zeros = Configuration(r, c.spins, BoundaryRule.GHOST_ZEROS)
    assert not is_flip_eligible(zeros, Site(0, 0))
    with pytest.raises(ValueError):
        is_flip_eligible(c, Site(5, 5))


def test_pgm_round_trip(tmp_path):
    r = Region(Site(-1, 2), 3, 2)
    spins = np.array([[1, 0, 1], [0, 1, 0]], np.int8)
    c = Configuration(r, spins)
    path = tmp_path / "snap.pgm"
    write_pgm(c, path, t=3.5)
    data, comment = read_pgm(path)
    assert np.array_equal(data, spins.astype(np.uint8) * 255)
    assert "origin=(-1,2)" in comment and "t=3.5" in comment

    gray = np.arange(6, dtype=np.uint8).reshape(2, 3)
    write_pgm_gray(gray, Site(0, 0), path)
    data2, _ = read_pgm(path)
    assert np.array_equal(data2, gray)
