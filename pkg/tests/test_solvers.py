import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cocycle_lab.bundle import (BundleVector, HilbertBundle, Section, birkhoff_cocycle_on,
                                coboundary, random_section, trivial_action, windowed_bundle,
                                zero_cocycle)
from cocycle_lab.groupoid import (TransformationSystem, build_transformation_groupoid,
                                  disjoint_union, pair_groupoid)
from cocycle_lab.scenario import gen_scenario
from cocycle_lab.solvers import (CocycleDefect, DomainError, GrowthClassification, Metric,
                                 NoMetric, NotACoboundary, NotMinimal, boundedness_probe,
                                 classify_growth, global_growth, hull_distance, midpoint_check,
                                 modulus_of_continuity_estimate, orbit_hull_invariance_check,
                                 solve_by_center, solve_least_squares, solve_transfer_function,
                                 uniform_convexity_delta)
from oracles import partial_sums

seeds = st.integers(0, 2**32 - 1)


def _residual(g, L, c, f):
    # recomputed by hand, without the package's coboundary
    return max(np.linalg.norm(c[a] - (f[g.rng[a]] - L[a] @ f[g.src[a]]))
               for a in range(g.n_arrows))


def _cycle(n, rng=None):
    if rng is None:
        return TransformationSystem(tuple((i + 1) % n for i in range(n)))
    perm = rng.permutation(n)
    T = [0] * n
    for i in range(n):
        T[perm[i]] = int(perm[(i + 1) % n])
    return TransformationSystem(tuple(T))


# -- center and least-squares solvers ------------------------------------------------

def test_center_zero_cocycle():
    g = pair_groupoid(3)
    e = HilbertBundle.constant(3, 2)
    rep = solve_by_center(g, trivial_action(g, e), zero_cocycle(g, e))
    assert rep.max_residual == 0.0 and rep.method == "center"
    assert all(np.all(v == 0) for v in rep.section.values)


def test_lsq_zero_cocycle_min_norm():
    g = pair_groupoid(3)
    e = HilbertBundle.constant(3, 2)
    rep = solve_least_squares(g, trivial_action(g, e), zero_cocycle(g, e))
    assert rep.max_residual == 0.0
    assert all(np.linalg.norm(v) <= 1e-15 for v in rep.section.values)
    # invariant sections of the trivial action are the constants
    assert rep.gauge_dim == 2


@given(seeds, st.sampled_from(["real", "complex"]))
def test_center_and_lsq_on_coboundaries(seed, field):
    sc = gen_scenario(seed, "minimal_groupoid", {"field": field})
    g, L, c = sc.groupoid, sc.action, sc.cocycle
    center = solve_by_center(g, L, c)
    lsq = solve_least_squares(g, L, c)
    assert center.max_residual <= 1e-7
    assert lsq.max_residual <= 1e-9
    for rep in (center, lsq):
        assert abs(_residual(g, L, c, rep.section) - rep.max_residual) <= 1e-12
    dc, dl = coboundary(g, L, center.section), coboundary(g, L, lsq.section)
    assert max(np.linalg.norm(dc[a] - dl[a]) for a in range(g.n_arrows)) <= 1e-6


def test_center_radii_are_fiber_radii(rng):
    sc = gen_scenario(11, "minimal_groupoid", {"units": 3, "dim": 2})
    rep = solve_by_center(sc.groupoid, sc.action, sc.cocycle)
    for x, r in rep.per_fiber_radii.items():
        pts = [sc.cocycle[a] for a in sc.groupoid.range_fibers[x]]
        assert r == pytest.approx(max(np.linalg.norm(p - rep.section[x]) for p in pts))


def test_lsq_perturbed_deterministic():
    sc = gen_scenario(4, "perturbed", {"delta": 0.5})
    a = solve_least_squares(sc.groupoid, sc.action, sc.cocycle)
    b = solve_least_squares(sc.groupoid, sc.action, sc.cocycle)
    assert a.max_residual > 1e-3
    assert a.max_residual == b.max_residual
    assert all(np.array_equal(x, y) for x, y in zip(a.section.values, b.section.values))


def test_center_rejects_non_cocycle():
    sc = gen_scenario(4, "perturbed", {"delta": 0.5})
    with pytest.raises(CocycleDefect):
        solve_by_center(sc.groupoid, sc.action, sc.cocycle)
    rep = solve_by_center(sc.groupoid, sc.action, sc.cocycle, strict=False)
    assert rep.max_residual > 1e-3


def test_center_not_minimal_warns(rng):
    g = disjoint_union(pair_groupoid(2), pair_groupoid(3))
    e = HilbertBundle.constant(5, 2)
    L = trivial_action(g, e)
    c = coboundary(g, L, random_section(e, rng))
    with pytest.warns(NotMinimal):
        rep = solve_by_center(g, L, c)
    assert rep.max_residual <= 1e-9 and rep.warnings


def test_center_on_windowed_z_drifts():
    # one unit, T = id: G(X, T) is Z and c(k) = k f(0); the ball grows with K
    sys_ = TransformationSystem((0,))
    residuals = []
    for K in (5, 10, 20, 40):
        g, _, L = windowed_bundle(build_transformation_groupoid(sys_, K))
        c = birkhoff_cocycle_on(build_transformation_groupoid(sys_, K), [0.5])
        residuals.append(solve_by_center(g, L, c, strict=False).max_residual)
    assert residuals == pytest.approx([2.5, 5.0, 10.0, 20.0])
    assert boundedness_probe(sys_, [0.5], 0, [5, 10, 20, 40]).verdict == "linear_growth"


# -- transfer function ----------------------------------------------------------------

def test_transfer_zero():
    assert solve_transfer_function(_cycle(4), [0, 0, 0, 0]) == [0, 0, 0, 0]


def test_transfer_constant_one():
    with pytest.raises(NotACoboundary) as err:
        solve_transfer_function(_cycle(5), [1] * 5)
    assert err.value.cycle_sum == 5


def test_transfer_needs_single_cycle():
    with pytest.raises(ValueError):
        solve_transfer_function(TransformationSystem((1, 0, 2)), [0, 0, 0])


@given(st.integers(1, 30), seeds)
def test_transfer_recovers_h(n, seed):
    rng = np.random.default_rng(seed)
    sys_ = _cycle(n, rng)
    h = [Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 7))) for _ in range(n)]
    f = [h[x] - h[sys_.T[x]] for x in range(n)]
    g = solve_transfer_function(sys_, f)
    assert all(g[x] - g[sys_.T[x]] == f[x] for x in range(n))
    assert len({g[x] - h[x] for x in range(n)}) == 1


@given(st.integers(2, 20), seeds)
def test_transfer_floats(n, seed):
    rng = np.random.default_rng(seed)
    sys_ = _cycle(n, rng)
    h = rng.standard_normal(n)
    f = [float(h[x] - h[sys_.T[x]]) for x in range(n)]
    g = solve_transfer_function(sys_, f, tol=1e-9)
    assert max(abs(g[x] - g[sys_.T[x]] - f[x]) for x in range(n)) <= 1e-10
    with pytest.raises(NotACoboundary):
        solve_transfer_function(sys_, [v + 1e-3 for v in f], tol=1e-9)


# -- growth probes ---------------------------------------------------------------------

def test_probe_zero_mean_rot3():
    gc = boundedness_probe(_cycle(3), [1, -1, 0], 0, [3, 6, 12, 24])
    assert gc.verdict == "bounded"
    assert [s for _, s in gc.sup_norm_by_window] == [1.0] * 4


@given(st.integers(2, 12), seeds)
def test_probe_zero_mean_sup_is_max_partial_sum(n, seed):
    rng = np.random.default_rng(seed)
    sys_ = _cycle(n, rng)
    f = [int(v) for v in rng.integers(-5, 6, n)]
    f[-1] -= sum(f)
    for x in range(n):
        # arrows into x carry minus the partial sums of f along the cycle from x
        top = max(abs(partial_sums(f, sys_.T, x, m)) for m in range(n))
        gc = boundedness_probe(sys_, f, x, [n, 2 * n, 4 * n])
        assert gc.sup_norm_by_window[-1][1] == top
        assert gc.verdict == "bounded"


def test_probe_ones_slope_one():
    gc = boundedness_probe(_cycle(5), [1] * 5, 0, [5, 10, 20, 40])
    assert gc.verdict == "linear_growth"
    assert gc.sup_norm_by_window == [(5, 5.0), (10, 10.0), (20, 20.0), (40, 40.0)]
    assert gc.slope_estimate == pytest.approx(1.0)


def test_probe_mean_03():
    f = [0.3 * (1 + 0.5 * (-1) ** i) for i in range(10)]
    gc = boundedness_probe(_cycle(10), f, 0, [10, 20, 40, 80])
    assert gc.verdict == "linear_growth"
    assert abs(gc.slope_estimate - 0.3) <= 0.05 * 0.3


def test_probe_units_agree():
    sys_ = _cycle(7)
    for f in ([1, -1, 2, -2, 0, 3, -3], [1] * 7):
        verdicts = {boundedness_probe(sys_, f, x, [7, 14, 28]).verdict for x in range(7)}
        assert len(verdicts) == 1
        assert global_growth(sys_, f, [7, 14, 28]).verdict in verdicts


def test_growth_monotone_asserted():
    with pytest.raises(AssertionError):
        GrowthClassification("bounded", [(1, 2.0), (2, 1.0)], 0.0)


def test_classify_growth_inconclusive():
    gc = classify_growth([1, 2, 4, 8], [1.0, 4.0, 16.0, 64.0])
    assert gc.verdict == "inconclusive"
    assert classify_growth([], []).verdict == "inconclusive"


def test_probe_bad_windows():
    with pytest.raises(ValueError):
        boundedness_probe(_cycle(3), [0, 0, 0], 0, [4, 2])


# -- hull invariance ----------------------------------------------------------------------

def test_hull_fixed_point_single_unit():
    sc = gen_scenario(2, "minimal_groupoid", {"units": 1, "isotropy": "Z/4", "dim": 2})
    g, L, c = sc.groupoid, sc.action, sc.cocycle
    fixed = BundleVector(0, sc.base_section[0])
    assert orbit_hull_invariance_check(g, L, c, fixed) <= 1e-12


def test_hull_distance_examples():
    V = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert hull_distance(V, np.array([0.25, 0.25])) <= 1e-9
    assert hull_distance(V, np.array([1.0, 1.0])) == pytest.approx(np.sqrt(0.5), abs=1e-6)
    assert hull_distance(V, np.array([-1.0, 0.0])) == pytest.approx(1.0)


@settings(max_examples=30)
@given(seeds)
def test_hull_invariant_for_cocycles(seed):
    sc = gen_scenario(seed, "minimal_groupoid", {})
    rng = np.random.default_rng(seed)
    x0 = int(rng.integers(0, sc.groupoid.n_units))
    u = random_section(sc.bundle, rng).values[x0]
    assert orbit_hull_invariance_check(sc.groupoid, sc.action, sc.cocycle, BundleVector(x0, u)) <= 1e-9


@settings(max_examples=30)
@given(seeds)
def test_hull_detects_perturbation(seed):
    sc = gen_scenario(seed, "perturbed", {"delta": 0.5})
    seed_pt = BundleVector(0, sc.base_section[0])
    assert orbit_hull_invariance_check(sc.groupoid, sc.action, sc.cocycle, seed_pt) > 1e-3
    with pytest.raises(CocycleDefect):
        orbit_hull_invariance_check(sc.groupoid, sc.action, sc.cocycle, seed_pt, strict=True)


# -- uniform convexity ------------------------------------------------------------------------

def test_delta_examples():
    assert uniform_convexity_delta(0.0) == 0.0
    assert uniform_convexity_delta(2.0) == 1.0
    e = np.array([1.0, 0.0])
    assert midpoint_check(e, -e)
    with pytest.raises(DomainError):
        uniform_convexity_delta(2.5)
    with pytest.raises(DomainError):
        uniform_convexity_delta(-0.1)
    with pytest.raises(DomainError):
        midpoint_check(2 * e, e)


def _ball_point(rng, d):
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v) * rng.uniform() ** (1 / d)


@given(seeds, st.integers(1, 4))
def test_midpoint_parallelogram(seed, d):
    rng = np.random.default_rng(seed)
    u1, u2 = _ball_point(rng, d), _ball_point(rng, d)
    assert midpoint_check(u1, u2)
    # parallelogram law, computed directly
    m2 = (u1 @ u1 + u2 @ u2) / 2 - (u1 - u2) @ (u1 - u2) / 4
    assert np.linalg.norm((u1 + u2) / 2) ** 2 == pytest.approx(m2, abs=1e-12)


@given(st.floats(0, 2))
def test_delta_monotone(eps):
    assert 0.0 <= uniform_convexity_delta(eps) <= 1.0
    assert uniform_convexity_delta(eps) <= uniform_convexity_delta(min(2.0, eps + 0.01)) + 1e-15


# -- modulus of continuity -----------------------------------------------------------------------

def _circle(N):
    return Metric(N, tuple((i, (i + 1) % N, 1.0 / N) for i in range(N)))


def test_modulus_constant_section():
    f = Section(tuple(np.array([2.0]) for _ in range(6)))
    assert set(modulus_of_continuity_estimate(f, 0.5, _circle(6)).values()) == {0.0}


def test_modulus_linear_on_circle():
    N = 12
    f = Section(tuple(np.array([x / N]) for x in range(N)))
    om = modulus_of_continuity_estimate(f, 1 / N, _circle(N))
    for x in range(1, N - 1):
        assert om[x] == pytest.approx(1 / N)
    # the seam between N - 1 and 0
    assert om[0] == pytest.approx((N - 1) / N) and om[N - 1] == pytest.approx((N - 1) / N)


def test_modulus_step():
    N = 10
    f = Section(tuple(np.array([float(x >= N // 2)]) for x in range(N)))
    om = modulus_of_continuity_estimate(f, 1 / N, _circle(N))
    for x in (0, N // 2 - 1, N // 2, N - 1):
        assert om[x] >= 1.0
    assert om[2] == 0.0


@given(st.integers(3, 15), seeds, st.floats(0, 1), st.floats(0, 1))
def test_modulus_monotone_in_r(N, seed, r1, r2):
    rng = np.random.default_rng(seed)
    f = Section(tuple(rng.standard_normal(2) for _ in range(N)))
    lo, hi = sorted((r1, r2))
    a = modulus_of_continuity_estimate(f, lo, _circle(N))
    b = modulus_of_continuity_estimate(f, hi, _circle(N))
    assert all(a[x] <= b[x] for x in range(N))


def test_modulus_no_metric():
    with pytest.raises(NoMetric):
        modulus_of_continuity_estimate(Section((np.zeros(1),)), 1.0, None)


@settings(max_examples=40)
@given(st.integers(2, 20), seeds)
def test_dichotomy_float_fuzz(n, seed):
    rng = np.random.default_rng(seed)
    sys_ = _cycle(n, rng)
    f = rng.standard_normal(n)
    f = [float(v) for v in f - f.mean()]
    K_list = [n, 2 * n, 4 * n, 8 * n]
    assert boundedness_probe(sys_, f, 0, K_list).verdict == "bounded"
    solve_transfer_function(sys_, f, tol=1e-9)
    shifted = [v + 0.05 for v in f]
    assert boundedness_probe(sys_, shifted, 0, K_list).verdict != "bounded"
    with pytest.raises(NotACoboundary):
        solve_transfer_function(sys_, shifted, tol=1e-9)
