import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special, stats

from groupsel.distributions import (RegionError, TruncatedChiSpec, TruncatedFSpec, chi_sf, f_sf,
                                    log_betainc, log_gammainc, screen_bound, truncated_sf)
from groupsel.intervals import IntervalUnion, intersect

INF = math.inf


# -- untruncated tails ---------------------------------------------------------------

def test_chi_sf_examples():
    for r in (1, 2, 7, 40):
        assert chi_sf(r, 0.0) == 1.0
    assert abs(chi_sf(5, math.sqrt(4.35)) - 0.5) < 0.002
    assert abs(chi_sf(2, 3.0) - math.exp(-4.5)) < 1e-15


def test_f_sf_examples():
    assert f_sf(3, 8, 0.0) == 1.0
    for d in (1, 4, 17):
        assert abs(f_sf(d, d, 1.0) - 0.5) < 1e-13
    dens = lambda x: stats.f.pdf(x, 2, 4)
    oracle = integrate.quad(dens, 2.0, np.inf, epsabs=1e-14, epsrel=1e-13)[0]
    assert abs(f_sf(2, 4, 2.0) - oracle) < 1e-10


def test_chi_sf_far_tail_relative_accuracy():
    for r, t in [(2, 30.0), (10, 35.0), (3, 37.0)]:
        ref = math.exp(stats.chi.logsf(t, r))
        assert abs(chi_sf(r, t) / ref - 1.0) < 1e-8


def test_incomplete_gamma_and_beta_against_scipy():
    rng = np.random.default_rng(11)
    for _ in range(200):
        a = rng.uniform(0.5, 60)
        x = rng.uniform(0, 3 * a)
        lp, lq = log_gammainc(a, x)
        assert abs(math.exp(lp) - special.gammainc(a, x)) < 1e-12
        assert abs(math.exp(lq) - special.gammaincc(a, x)) < 1e-12
        b = rng.uniform(0.5, 60)
        z = rng.uniform(0, 1)
        lp, lq = log_betainc(a, b, z)
        assert abs(math.exp(lp) - special.betainc(a, b, z)) < 1e-12
        assert abs(math.exp(lq) - special.betainc(b, a, 1 - z)) < 1e-11


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 60), st.floats(0, 15), st.floats(1e-3, 3))
def test_chi_sf_decreasing(r, t, dt):
    a, b = chi_sf(r, t), chi_sf(r, t + dt)
    assert 0.0 <= b <= a <= 1.0
    # strict where both values are representable away from 0 and 1
    if 1e-300 < b and a < 1.0 - 1e-12:
        assert b < a


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 30), st.integers(1, 200), st.floats(0, 20), st.floats(1e-3, 3))
def test_f_sf_decreasing(d1, d2, t, dt):
    a, b = f_sf(d1, d2, t), f_sf(d1, d2, t + dt)
    assert 0.0 <= b <= a <= 1.0


def test_chi_sf_vanishes():
    assert chi_sf(3, 60.0) < 1e-300


# -- truncated tails -----------------------------------------------------------------

def test_truncated_reduces_to_plain_survival():
    spec = TruncatedChiSpec(5, IntervalUnion.full(), math.sqrt(4.35))
    assert abs(truncated_sf(spec) - chi_sf(5, math.sqrt(4.35))) < 1e-12
    spec = TruncatedFSpec(3, 12, IntervalUnion.full(), 1.7)
    assert abs(truncated_sf(spec) - f_sf(3, 12, 1.7)) < 1e-12


def test_truncated_at_lower_endpoint_is_one():
    region = IntervalUnion([(1.3, 2.9)])
    assert truncated_sf(TruncatedChiSpec(4, region, 1.3)) == pytest.approx(1.0, abs=1e-14)
    assert truncated_sf(TruncatedFSpec(2, 9, region, 1.3)) == pytest.approx(1.0, abs=1e-14)


def test_truncated_two_intervals_closed_form():
    # chi_2 survival is exp(-t^2 / 2)
    S = lambda t: math.exp(-t * t / 2)
    region = IntervalUnion([(1, 2), (3, 4)])
    expected = (S(3) - S(4)) / ((S(1) - S(2)) + (S(3) - S(4)))
    assert abs(truncated_sf(TruncatedChiSpec(2, region, 3.0)) - expected) < 1e-14


def test_truncated_far_tail_region():
    # both endpoints deep in the tail: ratio from the closed form in log space
    region = IntervalUnion([(40.0, 41.0)])
    t = 40.5
    expected = (math.exp(-(t * t - 1600) / 2) - math.exp(-(1681 - 1600) / 2)) / (1 - math.exp(-40.5))
    assert truncated_sf(TruncatedChiSpec(2, region, t)) == pytest.approx(expected, rel=1e-9)


def test_truncated_spec_validation():
    with pytest.raises(ValueError):
        TruncatedChiSpec(2, IntervalUnion([(1, 2)]), 3.0)
    with pytest.raises(RegionError):
        TruncatedChiSpec(2, IntervalUnion.empty(), 1.0)
    with pytest.raises(ValueError):
        TruncatedFSpec(2, 0, IntervalUnion.full(), 1.0)
    # mass exp(-5000) underflows linear space but not the log-space path
    p = truncated_sf(TruncatedChiSpec(2, IntervalUnion([(100.0, 101.0)]), 100.5))
    expected = (math.exp(-(100.5 ** 2 - 1e4) / 2) - math.exp(-100.5)) / (1 - math.exp(-100.5))
    assert p == pytest.approx(expected, rel=1e-9)


def quad_truncated_chi(r, region, T):
    f = lambda x: stats.chi.pdf(x, r)
    num = sum(integrate.quad(f, max(lo, T), hi, epsabs=0, epsrel=1e-12)[0]
              for lo, hi in region if hi > T)
    den = sum(integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-12)[0] for lo, hi in region)
    return num / den


@pytest.mark.parametrize("r,rows,T", [
    (1, [(0.2, 0.9), (1.5, 2.5)], 2.0),
    (3, [(0.5, 1.0), (2.0, INF)], 2.7),
    (6, [(1.0, 3.5)], 2.2),
])
def test_truncated_chi_quadrature_oracle(r, rows, T):
    region = IntervalUnion(rows)
    assert abs(truncated_sf(TruncatedChiSpec(r, region, T)) - quad_truncated_chi(r, region, T)) < 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 20), st.floats(0.1, 4), st.floats(0.1, 4), st.floats(0, 1), st.floats(0, 1))
def test_truncated_sf_monotone_in_statistic(r, lo, width, a, b):
    region = IntervalUnion([(lo, lo + width)])
    t1, t2 = sorted((lo + a * width, lo + b * width))
    p1 = truncated_sf(TruncatedChiSpec(r, region, t1))
    p2 = truncated_sf(TruncatedChiSpec(r, region, t2))
    assert 0.0 <= p2 <= p1 + 1e-12 <= 1.0 + 1e-12


# -- interval unions -----------------------------------------------------------------

def test_intersect_examples():
    other = IntervalUnion([(1, 2), (5, 7)])
    assert intersect(IntervalUnion.full(), other) == other
    assert intersect(IntervalUnion([(0, 5)]), IntervalUnion([(2, INF)])).to_list() == [[2.0, 5.0]]
    a = IntervalUnion([(0, 1), (4, 9)])
    b = IntervalUnion([(0.5, 5), (8, 10)])
    got = intersect(a, b)
    assert got.to_list() == [[0.5, 1.0], [4.0, 5.0], [8.0, 9.0]]
    grid = np.arange(0, 12, 1e-3)
    for t in grid:
        if min(abs(t - e) for row in got for e in row) < 1e-9:
            continue
        assert got.contains(t) == (a.contains(t) and b.contains(t))


def test_interval_normalization_and_widen():
    u = IntervalUnion([(3, 4), (0, 1), (1 + 1e-12, 2)])
    assert u.to_list() == [[0.0, 2.0], [3.0, 4.0]]
    assert IntervalUnion([(1, 1 + 1e-14)]).is_empty()
    with pytest.warns(RuntimeWarning):
        w = IntervalUnion([(1.0, 2.0)]).widen_to(2.0 + 1e-9)
    assert w.contains(2.0 + 1e-9)
    with pytest.raises(ValueError):
        IntervalUnion([(1.0, 2.0)]).widen_to(2.1)
    assert IntervalUnion.from_list([[1.0, None]]).upper == INF


# endpoints on a quarter-integer lattice so the grid below never sits on one
interval_unions = st.lists(st.tuples(st.integers(0, 40), st.integers(1, 8)), max_size=5).map(
    lambda rs: IntervalUnion([(lo / 4, (lo + w) / 4) for lo, w in rs]))


def members(u, grid):
    return np.array([u.contains(t) for t in grid])


GRID = np.arange(0.0, 13.0, 0.0625) + 0.03125


@settings(max_examples=80, deadline=None)
@given(interval_unions, interval_unions, interval_unions)
def test_intersect_algebra(a, b, c):
    ab = intersect(a, b)
    assert ab == intersect(b, a)
    assert intersect(ab, c) == intersect(a, intersect(b, c))
    assert intersect(a, a) == a
    assert np.array_equal(members(ab, GRID), members(a, GRID) & members(b, GRID))
    rows = ab.rows
    assert np.all(rows[1:, 0] > rows[:-1, 1])


# -- screening bound -----------------------------------------------------------------

def test_screen_bound_examples():
    assert abs(screen_bound(10, 2, 0.01) - 23.24) < 0.01
    assert abs(screen_bound(50, 2, 0.10) - 21.35) < 0.01
    assert abs(screen_bound(1000, 50, 0.01) - 120.99) < 0.01


def test_screen_bound_exceeds_exact_quantile():
    # the bound dominates the exact (1 - eps) quantile of the max of G chi-square(k)
    for G, k, eps in [(10, 2, 0.01), (50, 5, 0.1), (1000, 10, 0.01)]:
        q = stats.chi2.ppf((1 - eps) ** (1 / G), k)
        assert screen_bound(G, k, eps) >= q


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5000), st.integers(1, 80), st.floats(1e-4, 0.9))
def test_screen_bound_monotone(G, k, eps):
    b = screen_bound(G, k, eps)
    assert screen_bound(G + 1, k, eps) > b
    assert screen_bound(G, k + 1, eps) > b
    assert screen_bound(G, k, min(0.99, eps * 1.1)) < b
