import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from groupsel import GroupedDesign, StepwiseConfig, forward_stepwise
from groupsel.geometry import (FSlice, candidate_angles, chi_slice_coefficients,
                               chi_slice_region, f_level_set, f_slice_coefficients,
                               f_slice_constraint, f_slice_region, inequality_f_coefficients,
                               quartic_coefficients, quartic_roots, solve_quadratic_nonneg)
from groupsel.inference import chi_slice_for, f_slice_for
from groupsel.linalg import OrthoBasis
from groupsel.stepwise import QuadraticInequality

from oracles import membership_mismatches, ordering_regions, orthogonal_instance, small_instance

INF = math.inf


def dense_Q(q, n):
    Q = q.identity * np.eye(n)
    for w, B in q.terms:
        B = getattr(B, "vectors", B)
        Q += w * B @ B.T
    return Q


def dense_value(q, v):
    a = q.linear if q.linear is not None else np.zeros_like(v)
    return float(v @ dense_Q(q, v.shape[0]) @ v + a @ v + q.offset)


@pytest.mark.parametrize("coef,expected", [
    ((1, 0, -4), [[2.0, None]]),
    ((-1, 3, -2), [[1.0, 2.0]]),
    ((0, 1, -1), [[1.0, None]]),
    ((1, -3, 2), [[0.0, 1.0], [2.0, None]]),
    ((1, 0, 1), [[0.0, None]]),
    ((-1, 0, -1), []),
    ((0, 0, -1), []),
    ((0, -1, 2), [[0.0, 2.0]]),
])
def test_solve_quadratic_examples(coef, expected):
    got = solve_quadratic_nonneg(*coef).to_list()
    assert len(got) == len(expected)
    for (lo, hi), (elo, ehi) in zip(got, expected):
        assert lo == pytest.approx(elo, abs=1e-14)
        assert (hi is None) == (ehi is None)
        if ehi is not None:
            assert hi == pytest.approx(ehi, abs=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_solve_quadratic_grid_oracle(a2, a1, a0):
    region = solve_quadratic_nonneg(a2, a1, a0)
    ends = [e for row in region for e in row if math.isfinite(e)]
    for t in np.linspace(0, 20, 401):
        if any(abs(t - e) < 1e-7 for e in ends):
            continue
        val = a2 * t * t + a1 * t + a0
        if abs(val) < 1e-9:
            continue
        assert region.contains(t) == (val >= 0)


def test_empty_event_gives_full_region():
    rng = np.random.default_rng(0)
    D = GroupedDesign.from_sizes(rng.standard_normal((10, 2)), [2])
    y = rng.standard_normal(10)
    fit = forward_stepwise(D, y, StepwiseConfig(k=2.0, sigma=1.0, max_steps=1))
    assert fit.event.n_inequalities == 0
    sl, _ = chi_slice_for(fit, 1, 1.0)
    assert chi_slice_region(fit.event, sl).is_full()
    fsl, _, _ = f_slice_for(fit, 1)
    assert f_slice_region(fit.event, fsl).is_full()


@pytest.mark.parametrize("seed", range(6))
def test_chi_coefficients_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    D, y, cfg = small_instance(rng, known=True, aic=bool(seed % 2), s_plus=1 + seed % 2)
    fit = forward_stepwise(D, y, cfg)
    g = fit.active[-1]
    sl, _ = chi_slice_for(fit, g, 1.0)
    a2, a1, a0 = chi_slice_coefficients(fit.event, sl)
    for j, q in enumerate(fit.event.inequalities):
        Q = dense_Q(q, D.n)
        lin = q.linear if q.linear is not None else np.zeros(D.n)
        e2 = sl.sigma ** 2 * sl.u @ Q @ sl.u
        e1 = 2 * sl.sigma * sl.u @ Q @ sl.z + sl.sigma * lin @ sl.u
        e0 = sl.z @ Q @ sl.z + lin @ sl.z + q.offset
        scale = 1.0 + abs(e2) + abs(e1) + abs(e0)
        assert abs(a2[j] - e2) <= 1e-9 * scale
        assert abs(a1[j] - e1) <= 1e-9 * scale
        assert abs(a0[j] - e0) <= 1e-9 * scale


def test_chi_slice_invariants():
    rng = np.random.default_rng(3)
    D, y, cfg = small_instance(rng, known=True, aic=False)
    fit = forward_stepwise(D, y, cfg)
    for g in fit.active:
        sl, _ = chi_slice_for(fit, g, 1.0)
        assert abs(np.linalg.norm(sl.u) - 1) < 1e-10
        assert abs(sl.u @ sl.z) <= 1e-8 * np.linalg.norm(sl.z)
        assert np.allclose(sl.point(sl.statistic), y)


def test_f_slice_invariants():
    rng = np.random.default_rng(4)
    D, y, cfg = small_instance(rng, known=False, aic=False)
    fit = forward_stepwise(D, y, cfg)
    for g in fit.active:
        sl, d1, d2 = f_slice_for(fit, g)
        assert abs(sl.v_delta @ sl.v2) <= 1e-8
        assert abs(sl.v_delta @ sl.z) <= 1e-8 * (1 + np.linalg.norm(sl.z))
        assert abs(sl.v2 @ sl.z) <= 1e-8 * (1 + np.linalg.norm(sl.z))
        assert sl.c > 0
        assert np.allclose(sl.point(sl.statistic), y)


def random_fslice(rng, n):
    Q, _ = np.linalg.qr(rng.standard_normal((n, 3)))
    z = Q[:, 2] * rng.uniform(0.5, 3)
    return FSlice(v_delta=Q[:, 0], v2=Q[:, 1], r=rng.uniform(0.5, 4), z=z,
                  c=rng.uniform(0.1, 3), statistic=1.0)


def random_inequality(rng, n):
    Bp = np.linalg.qr(rng.standard_normal((n, 2)))[0]
    Bm = np.linalg.qr(rng.standard_normal((n, 3)))[0]
    return QuadraticInequality(terms=((1.0, OrthoBasis(Bp)), (-0.8, OrthoBasis(Bm))),
                               identity=rng.uniform(-0.2, 0.2),
                               linear=rng.standard_normal(n) * 0.5, offset=rng.uniform(-2, 2))


def test_f_constraint_endpoints_and_dense_oracle():
    rng = np.random.default_rng(10)
    n = 11
    for _ in range(20):
        sl = random_fslice(rng, n)
        q = random_inequality(rng, n)
        x11, x12, x22, x1, x2, x0 = inequality_f_coefficients(q, sl)
        r = sl.r
        assert f_slice_constraint(q, sl, 0.0) == pytest.approx(r * r * x22 + r * x2 + x0, abs=1e-12)
        assert f_slice_constraint(q, sl, INF) == pytest.approx(r * r * x11 + r * x1 + x0, abs=1e-12)
        assert f_slice_constraint(q, sl, 1e12) == pytest.approx(r * r * x11 + r * x1 + x0, abs=1e-5)
        for t in rng.exponential(2.0, 5):
            assert f_slice_constraint(q, sl, t) == pytest.approx(dense_value(q, sl.point(t)), abs=1e-10)


def test_f_level_set_positive_everywhere_is_full():
    # I(t) = g1^2 + g2^2 + 1 = r^2 + 1 > 0 for every t
    x = np.array([1.0, 0.0, 1.0, 0.0, 0.0, 1.0])
    r, c = 1.7, 0.6
    grid = np.concatenate([[0.0], np.logspace(-6, 8, 2000)])
    from groupsel import kernels
    assert all(kernels.fslice_value(x, r, c, t) > 0 for t in grid)
    assert f_level_set(x, r, c).is_full()


@pytest.mark.parametrize("seed", range(15))
def test_f_level_set_roots_and_signs(seed):
    rng = np.random.default_rng(100 + seed)
    x = rng.standard_normal(6)
    r, c = rng.uniform(0.5, 3), rng.uniform(0.2, 3)
    from groupsel import kernels
    I = lambda t: kernels.fslice_value(x, r, c, t)
    region = f_level_set(x, r, c)
    scale = r * r * np.abs(x[:3]).sum() + r * np.abs(x[3:5]).sum() + abs(x[5])
    ends = sorted({e for row in region for e in row if 0 < e < INF})
    for e in ends:
        assert abs(I(e)) <= 1e-8 * (1 + scale)
    # sign is constant between consecutive endpoints on a 64-point probe
    knots = [0.0] + ends + [max(ends + [1.0]) * 10]
    for lo, hi in zip(knots, knots[1:]):
        ts = np.linspace(lo, hi, 66)[1:-1]
        inside = [region.contains(t) for t in ts]
        assert len(set(inside)) == 1
        vals = [I(t) for t in ts if abs(I(t)) > 1e-9 * (1 + scale)]
        assert all((v >= 0) == inside[0] for v in vals)


def test_quartic_roots_match_trig_zeros():
    rng = np.random.default_rng(7)
    for _ in range(20):
        x = rng.standard_normal(6)
        r = rng.uniform(0.5, 3)
        th = candidate_angles(quartic_roots(quartic_coefficients(x[None, :], r))[0])
        for t in th:
            g1, g2 = r * math.sin(t), r * math.cos(t)
            val = g1 * g1 * x[0] + g1 * g2 * x[1] + g2 * g2 * x[2] + g1 * x[3] + g2 * x[4] + x[5]
            assert abs(val) < 1e-6 * (1 + r * r * np.abs(x).sum())


def test_f_slice_coefficients_match_per_inequality():
    rng = np.random.default_rng(12)
    D, y, cfg = small_instance(rng, known=False, aic=True)
    fit = forward_stepwise(D, y, cfg)
    sl, _, _ = f_slice_for(fit, fit.active[0])
    X = f_slice_coefficients(fit.event, sl)
    for j, q in enumerate(fit.event.inequalities):
        ref = inequality_f_coefficients(q, sl)
        assert np.allclose(X[j], ref, atol=1e-9 * (1 + np.abs(ref).max()))


@pytest.mark.parametrize("seed", range(8))
def test_orthogonal_ordering_regions(seed):
    rng = np.random.default_rng(seed)
    D = orthogonal_instance(rng)
    y = rng.standard_normal(D.n)
    fit, Ts, regions, T_next = ordering_regions(D, y, 4)
    assert all(a > b for a, b in zip(Ts, Ts[1:]))
    bounds = [INF] + Ts + [T_next]
    for s, region in enumerate(regions, start=1):
        assert len(region) == 1
        lo, hi = region.rows[0]
        assert lo == pytest.approx(bounds[s + 1], rel=1e-8)
        if s == 1:
            assert hi == INF
        else:
            assert hi == pytest.approx(bounds[s - 1], rel=1e-8)


@pytest.mark.parametrize("known", [True, False])
@pytest.mark.parametrize("aic", [True, False])
def test_membership_replay(known, aic):
    rng = np.random.default_rng(1000 + 2 * known + aic)
    total_bad = total = 0
    for i in range(5):
        D, y, cfg = small_instance(rng, known, aic, s_plus=1 + i % 2, intercept=i % 3 == 0)
        bad, checked = membership_mismatches(D, y, cfg, rng, probes=60)
        total_bad += bad
        total += checked
    assert total > 0 and total_bad == 0


def test_region_contains_statistic():
    rng = np.random.default_rng(77)
    for i in range(10):
        D, y, cfg = small_instance(rng, known=bool(i % 2), aic=True)
        fit = forward_stepwise(D, y, cfg)
        for g in fit.active:
            if cfg.known_sigma:
                sl, _ = chi_slice_for(fit, g, 1.0)
                region = chi_slice_region(fit.event, sl)
            else:
                sl, _, _ = f_slice_for(fit, g)
                region = f_slice_region(fit.event, sl)
            assert region.contains(sl.statistic)
