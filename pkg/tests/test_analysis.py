import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polarvol import analysis, geom, measure
from polarvol.rng import RngStream

LEB2 = measure.LebesgueRestricted(math.inf, 2)


def _report(grid, values, tol=1e-9):
    return analysis.ProfileReport(
        np.asarray(grid, float), np.asarray(values, float), np.zeros(len(grid)), tol
    )


def test_convexity_check_accepts_parabola():
    t = np.linspace(-2, 2, 9)
    rep = _report(t, t ** 2)
    res = analysis.convexity_even_check(rep, 1e-9)
    assert res["even"] and res["midpoint_convex"]
    assert rep.worst_violation <= 1e-12


def test_convexity_check_flags_concave():
    t = np.linspace(-2, 2, 9)
    rep = _report(t, -(t ** 2))
    res = analysis.convexity_even_check(rep, 1e-9)
    assert not res["midpoint_convex"]
    assert rep.worst_violation > 0


def test_evenness_check_flags_odd_part():
    t = np.linspace(-2, 2, 9)
    rep = _report(t, t ** 2 + 0.1 * t)
    res = analysis.convexity_even_check(rep, 1e-9)
    assert not res["even"]


def test_shadow_profile_exact_parallelogram():
    # columns (+-1, t): K is the rectangle [-1,1] x [-|t|,|t|], so
    # K° is a cross-polytope of volume 2/|t| and g(t) = |t|/2
    theta = np.array([0.0, 1.0])
    base = np.array([[1.0, 0.0], [-1.0, 0.0]])
    cfg = analysis.ShadowConfig(theta, base, geom.LqBall(1.0, 2), 0.0, LEB2)
    t_grid = np.linspace(-2, 2, 9)
    rep = analysis.shadow_profile(cfg, np.array([1.0, 1.0]), t_grid, 0, RngStream(0, 0))
    assert rep.values == pytest.approx(np.abs(t_grid) / 2, abs=1e-9)
    assert rep.even and rep.midpoint_convex


def test_shadow_profile_mc_branch_matches_geometry():
    # rball > 0 rules out the exact oracle; K(t) = rect + 0.5 B
    theta = np.array([0.0, 1.0])
    base = np.array([[1.0, 0.0], [-1.0, 0.0]])
    cfg = analysis.ShadowConfig(theta, base, geom.LqBall(1.0, 2), 0.5, LEB2)
    rep = analysis.shadow_profile(
        cfg, np.array([1.0, 1.0]), np.linspace(-1.0, 1.0, 5), 60_000, RngStream(2, 0)
    )
    assert rep.even and rep.midpoint_convex
    assert rep.values[0] == pytest.approx(rep.values[4], abs=6 * max(rep.stderrs))


def test_shadow_config_requires_orthogonal_base():
    with pytest.raises((ValueError, geom.GeometryError)):
        analysis.ShadowConfig(
            np.array([0.0, 1.0]),
            np.array([[1.0, 0.5], [-1.0, 0.0]]),
            geom.LqBall(1.0, 2),
            0.0,
            LEB2,
        )


def test_busemann_gauge_gaussian_closed_form():
    psi = lambda x: math.exp(-float(np.dot(x, x)) / 2.0)
    for z in (np.array([1.0, 0.0]), np.array([0.6, -0.8]), np.array([2.0, 1.0])):
        expected = np.linalg.norm(z) / math.sqrt(2 * math.pi)
        assert analysis.busemann_gauge(psi, z) == pytest.approx(expected, abs=1e-6)


def test_busemann_triangle_inequality_battery():
    psi = lambda x: 1.0 if np.all(np.abs(x) <= 1.0) else 0.0
    gen = RngStream(9, 0).generator()
    for _ in range(40):
        z1, z2 = gen.uniform(-1, 1, 2), gen.uniform(-1, 1, 2)
        if min(np.linalg.norm(z1), np.linalg.norm(z2), np.linalg.norm(z1 + z2)) < 1e-3:
            continue
        f1 = analysis.busemann_gauge(psi, z1, 2.0)
        f2 = analysis.busemann_gauge(psi, z2, 2.0)
        f12 = analysis.busemann_gauge(psi, z1 + z2, 2.0)
        assert f12 <= f1 + f2 + 1e-6


def test_neg_recip_concavity_spot_check_gaussian():
    psi = lambda x: math.exp(-float(np.dot(x, x)) / 2.0)
    assert analysis.spot_check_neg_recip_concavity(psi, 2, RngStream(1, 0))


def test_ball_bobkov_gauge_indicator_closed_form():
    # f = 1_{B_2^2}: F(x) = (|x|^{-p}/p)^{-1/p} = p^{1/p} |x|
    f = lambda y: 1.0 if float(np.dot(y, y)) <= 1.0 else 0.0
    for p in (1.0, 2.0, 3.0):
        x = np.array([0.6, 0.8])
        assert analysis.ball_bobkov_gauge(f, p, x, upper=10.0) == pytest.approx(
            p ** (1.0 / p), abs=1e-8
        )


def test_ball_bobkov_gauge_homogeneous():
    f = lambda y: math.exp(-float(np.abs(y).sum()))
    x = np.array([0.3, -0.7])
    v = analysis.ball_bobkov_gauge(f, 2.0, x, upper=200.0)
    v3 = analysis.ball_bobkov_gauge(f, 2.0, 3.0 * x, upper=200.0)
    assert v3 == pytest.approx(3.0 * v, rel=1e-8)


def test_milman_pajor_gauge_gaussian_halfplane():
    # p = 1, E = span(e2), v = e1: Phi(v) = (int_{x1 >= 0} phi)^{-1} = 1/pi
    phi = lambda x: math.exp(-float(np.dot(x, x)) / 2.0)
    val = analysis.milman_pajor_gauge(phi, np.array([[0.0, 1.0]]), 1.0, np.array([1.0, 0.0]), 20.0)
    assert val == pytest.approx(1.0 / math.pi, abs=1e-7)


def test_milman_pajor_rejects_non_orthogonal_v():
    phi = lambda x: 1.0
    with pytest.raises(ValueError):
        analysis.milman_pajor_gauge(phi, np.array([[1.0, 0.0]]), 1.0, np.array([1.0, 1.0]))


def test_brunn_profile_convex_quadratic():
    phi = lambda t, x: math.sqrt(1.0 + t * t + float(np.dot(x, x)))
    rep = analysis.brunn_profile(phi, alpha=3.0, n=1, t_grid=np.linspace(-2, 2, 9), domain_radius=60.0)
    assert rep.midpoint_convex
    assert rep.worst_violation <= 1e-6


def test_brunn_profile_constant_slab_is_flat():
    phi = lambda t, x: 1.0 if float(np.dot(x, x)) <= 1.0 else math.inf
    rep = analysis.brunn_profile(phi, alpha=1.0, n=1, t_grid=np.array([-1.0, 0.0, 1.0]), domain_radius=5.0)
    # (int_{-1}^{1} 1 dx)^{-1} = 1/2 at every t
    assert rep.values == pytest.approx([0.5, 0.5, 0.5], abs=1e-9)


def test_step1d_eval_integral_layers():
    g = analysis.Step1D(np.array([0.0, 1.0, 2.0, 3.0]), np.array([2.0, 1.0, 3.0]))
    assert g(0.5) == 2.0 and g(1.5) == 1.0 and g(2.5) == 3.0 and g(5.0) == 0.0
    assert g.integral() == pytest.approx(6.0)
    layers = g.layers()
    total = sum(w * sum(hi - lo for lo, hi in cells) for w, cells in layers)
    assert total == pytest.approx(6.0)


def test_rearrange_step1d_known_example():
    g = analysis.Step1D(np.array([0.0, 1.0, 2.0, 3.0]), np.array([2.0, 1.0, 3.0]))
    gs = analysis.rearrange_step1d(g)
    assert gs.breaks == pytest.approx([-1.5, -1.0, -0.5, 0.5, 1.0, 1.5])
    assert gs.values == pytest.approx([1.0, 2.0, 3.0, 2.0, 1.0])
    assert gs.integral() == pytest.approx(g.integral())


def test_rearrange_step1d_fixed_point():
    g = analysis.Step1D(np.array([-1.0, -0.5, 0.5, 1.0]), np.array([1.0, 2.0, 1.0]))
    gs = analysis.rearrange_step1d(g)
    assert gs.breaks == pytest.approx(g.breaks)
    assert gs.values == pytest.approx(g.values)


def test_rbll_equality_for_symmetric_decreasing_inputs():
    # symmetric decreasing inputs are fixed points: lhs must equal rhs
    g1 = analysis.Step1D(np.array([-1.0, 1.0]), np.array([1.0]))
    g2 = analysis.Step1D(np.array([-0.5, 0.5]), np.array([2.0]))
    res = analysis.rbll_check_1d([g1, g2], np.array([[1.0, 0.0], [0.5, 1.0]]), 6.0)
    assert res["lhs"] == pytest.approx(res["rhs"], abs=1e-9)


def test_rbll_inequality_shifted_indicator():
    # shifting an indicator off center can only lower the correlation
    g = analysis.Step1D(np.array([1.0, 2.0]), np.array([1.0]))
    res = analysis.rbll_check_1d([g, g], np.array([[1.0, 1.0], [1.0, -1.0]]), 6.0)
    assert res["lhs"] <= res["rhs"] + 1e-9


@given(st.integers(0, 2 ** 31))
@settings(max_examples=25, deadline=None)
def test_rbll_random_two_function_cases(seed):
    gen = RngStream(seed, 0).generator()
    gs = []
    for _ in range(2):
        a = float(gen.uniform(-2, 2))
        w = float(gen.uniform(0.2, 1.5))
        h = float(gen.uniform(0.2, 3.0))
        gs.append(analysis.Step1D(np.array([a, a + w]), np.array([h])))
    coeffs = gen.integers(-1, 2, size=(2, 2)).astype(float)
    res = analysis.rbll_check_1d(gs, coeffs, 8.0)
    assert res["lhs"] <= res["rhs"] + 1e-9
