import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from circtrend.circular import angular_risk, mod2pi
from circtrend.estimators import (AngularSample, EmptyNeighborhood, Fallback, exclusion_mask,
                                  fit_arrays, fit_excluding, fit_point, fit_surface,
                                  ll_components, nw_components)
from circtrend.kernels import BandwidthMatrix, KernelSpec, kernel_H_eval
from circtrend.spatial import ScenarioSpec, WrappedGPSpec, Exponential, generate_sample, replicate_rng

SPEC2 = KernelSpec(d=2)

X5 = np.array([[0.1, 0.2], [0.4, 0.3], [0.35, 0.8], [0.7, 0.6], [0.9, 0.1]])
T5 = np.array([0.3, 1.2, 2.5, 5.9, 4.0])
X8 = np.array([[0.05, 0.1], [0.3, 0.25], [0.55, 0.2], [0.2, 0.6],
               [0.5, 0.5], [0.8, 0.45], [0.4, 0.9], [0.75, 0.8]])
T8 = np.array([0.1, 0.7, 1.9, 6.1, 2.2, 3.3, 4.4, 5.2])


def naive_nw(X, theta, H, x):
    num_s = num_c = den = 0.0
    for i in range(len(X)):
        w = kernel_H_eval(SPEC2, H, X[i] - x)
        num_s += w * np.sin(theta[i])
        num_c += w * np.cos(theta[i])
        den += w
    return num_s / den, num_c / den


def naive_ll(X, theta, H, x):
    w = np.array([kernel_H_eval(SPEC2, H, Xi - x) for Xi in X])
    Z = np.column_stack([np.ones(len(X)), X - x])
    A = Z.T @ (w[:, None] * Z)
    out = []
    for y in (np.sin(theta), np.cos(theta)):
        beta = np.linalg.solve(A, Z.T @ (w * y))
        out.append(beta[0])
    return tuple(out)


def test_nw_matches_double_loop_oracle():
    sample = AngularSample(X5, T5)
    H = BandwidthMatrix.scalar(0.5, 2)
    for x in [np.array([0.4, 0.4]), X5[2], np.array([0.8, 0.2])]:
        assert_allclose(nw_components(sample, SPEC2, H, x), naive_nw(X5, T5, H, x),
                        rtol=0, atol=1e-12)


def test_ll_matches_dense_wls_oracle():
    sample = AngularSample(X8, T8)
    H = BandwidthMatrix.diag([0.4, 0.3])
    for x in [np.array([0.45, 0.45]), X8[4], np.array([0.4, 0.4])]:
        m1, m2, fb = ll_components(sample, SPEC2, H, x)
        assert fb == Fallback.NONE
        assert_allclose((m1, m2), naive_ll(X8, T8, H, x), rtol=0, atol=1e-9)


def test_ll_matches_wls_with_full_bandwidth():
    sample = AngularSample(X8, T8)
    H = BandwidthMatrix([[0.5, 0.1], [0.1, 0.45]])
    x = np.array([0.5, 0.45])
    m1, m2, _ = ll_components(sample, SPEC2, H, x)
    assert_allclose((m1, m2), naive_ll(X8, T8, H, x), atol=1e-9)


def test_constant_responses():
    theta0 = 2.1
    sample = AngularSample(X8, np.full(8, theta0))
    H = BandwidthMatrix.scalar(0.6, 2)
    x = np.array([0.5, 0.5])
    assert_allclose(nw_components(sample, SPEC2, H, x), (np.sin(theta0), np.cos(theta0)))
    m1, m2, fb = ll_components(sample, SPEC2, H, x)
    assert fb == Fallback.NONE
    assert_allclose((m1, m2), (np.sin(theta0), np.cos(theta0)), atol=1e-12)
    for p in (0, 1):
        assert_allclose(fit_point(sample, SPEC2, H, x, p).m_hat, theta0, atol=1e-12)


def test_single_observation():
    sample = AngularSample([[0.3, 0.3]], [1.0])
    m1, m2 = nw_components(sample, SPEC2, BandwidthMatrix.scalar(0.1, 2), np.array([0.3, 0.3]))
    assert_allclose((m1, m2), (np.sin(1.0), np.cos(1.0)))


def test_ll_reproduces_linear_responses():
    # sin(theta) linear in X, cos(theta) constant: theta = arcsin(a + b.X) with cos > 0
    rng = np.random.default_rng(3)
    X = rng.uniform(size=(60, 2))
    s = 0.1 + 0.3 * X[:, 0] - 0.2 * X[:, 1]
    theta = np.arcsin(s)
    # components are not both linear, so check the sine channel directly
    sample = AngularSample(X, theta)
    x = np.array([0.5, 0.5])
    m1, _, fb = ll_components(sample, SPEC2, BandwidthMatrix.scalar(0.4, 2), x)
    assert fb == Fallback.NONE
    assert abs(m1 - (0.1 + 0.15 - 0.1)) < 1e-9


def test_ll_falls_back_on_collinear_design():
    # all points on a line: the normal matrix is rank deficient
    X = np.column_stack([np.linspace(0, 1, 10), np.full(10, 0.5)])
    sample = AngularSample(X, np.linspace(0, 1, 10))
    H = BandwidthMatrix.scalar(0.5, 2)
    x = np.array([0.5, 0.5])
    m1, m2, fb = ll_components(sample, SPEC2, H, x)
    assert fb == Fallback.LL_FELL_BACK_TO_NW
    assert_allclose((m1, m2), nw_components(sample, SPEC2, H, x))


def test_ll_falls_back_with_too_few_weights():
    sample = AngularSample(X5, T5)
    H = BandwidthMatrix.scalar(0.05, 2)
    fit = fit_point(sample, SPEC2, H, X5[0], 1)
    assert fit.fallback == Fallback.LL_FELL_BACK_TO_NW
    assert_allclose(fit.m_hat, T5[0])


def test_empty_neighbourhood():
    sample = AngularSample(X5, T5)
    H = BandwidthMatrix.scalar(0.01, 2)
    x = np.array([0.6, 0.95])
    with pytest.raises(EmptyNeighborhood):
        nw_components(sample, SPEC2, H, x)
    with pytest.raises(EmptyNeighborhood):
        ll_components(sample, SPEC2, H, x)
    with pytest.raises(EmptyNeighborhood):
        fit_point(sample, SPEC2, H, x, 0)
    res = fit_surface(sample, SPEC2, H, [x, X5[1]], 0)
    assert res[0].fallback == Fallback.UNDEFINED and not res[0].defined
    assert_allclose(res[1].m_hat, T5[1])


def test_cancelling_responses_are_undefined():
    X = np.array([[0.4, 0.5], [0.6, 0.5]])
    sample = AngularSample(X, [np.pi / 2, 3 * np.pi / 2])
    fit = fit_arrays(sample, SPEC2, BandwidthMatrix.scalar(0.5, 2), [[0.5, 0.5]], 0)
    # sin cancels exactly; cos(pi/2) and cos(3pi/2) do not, so direction is defined
    assert fit.m1[0] == 0.0
    # no float angle pair cancels in both channels, so patch the cached components
    S = AngularSample(X, [0.0, 0.0])
    object.__setattr__(S, "sin", np.zeros(2))
    object.__setattr__(S, "cos", np.array([1.0, -1.0]))
    fit = fit_arrays(S, SPEC2, BandwidthMatrix.scalar(0.5, 2), [[0.5, 0.5]], 0)
    assert fit.fallback[0] == Fallback.UNDEFINED and np.isnan(fit.m_hat[0])


def test_fit_point_is_arctan2_of_components():
    sample = AngularSample(X5, T5)
    H = BandwidthMatrix.scalar(0.5, 2)
    x = np.array([0.5, 0.5])
    m1, m2 = nw_components(sample, SPEC2, H, x)
    fit = fit_point(sample, SPEC2, H, x, 0)
    assert fit.m_hat == mod2pi(np.arctan2(m1, m2))
    assert_allclose(fit.resultant, np.hypot(m1, m2))


def test_surface_order_and_empty():
    sample = AngularSample(X8, T8)
    H = BandwidthMatrix.scalar(0.6, 2)
    assert fit_surface(sample, SPEC2, H, [], 0) == []
    res = fit_surface(sample, SPEC2, H, X8[::-1], 1)
    for k, r in enumerate(res):
        assert np.array_equal(r.point, X8[::-1][k])
        assert r.m_hat == fit_point(sample, SPEC2, H, X8[::-1][k], 1).m_hat


def test_tiny_bandwidth_interpolates():
    sample = AngularSample(X8, T8)
    res = fit_surface(sample, SPEC2, BandwidthMatrix.scalar(0.01, 2), X8, 0)
    assert_allclose([r.m_hat for r in res], T8, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(c=st.floats(-10, 10), p=st.sampled_from([0, 1]), seed=st.integers(0, 1000))
def test_rotation_equivariance(c, p, seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(30, 2))
    theta = rng.uniform(0, 2 * np.pi, 30)
    sample = AngularSample(X, theta)
    H = BandwidthMatrix.diag([0.5, 0.4])
    pts = rng.uniform(0.2, 0.8, size=(5, 2))
    a = fit_arrays(sample, SPEC2, H, pts, p)
    b = fit_arrays(sample.rotated(c), SPEC2, H, pts, p)
    ok = a.resultant > 1e-6
    assert np.all(angular_risk(mod2pi(a.m_hat[ok] + c), b.m_hat[ok]) < 1e-12)
    assert_allclose(a.resultant, b.resultant, atol=1e-12)


def test_simulated_surface_sanity():
    scen = ScenarioSpec(WrappedGPSpec(Exponential(0.1)), "r1", 100)
    sample, truth, _ = generate_sample(scen, replicate_rng(7, 0))
    g = np.linspace(0, 1, 30)
    grid = np.array([(a, b) for a in g for b in g])
    best = min(np.mean(angular_risk(scen.trend(grid), [r.m_hat for r in
                                                        fit_surface(sample, SPEC2, BandwidthMatrix.diag([h1, h2]), grid, 0)]))
               for h1 in (0.2, 0.35, 0.5) for h2 in (0.3, 0.6, 1.0))
    assert best < 0.25


def test_exclusion_mask_and_fit_excluding():
    sample = AngularSample(X8, T8)
    H = BandwidthMatrix.scalar(0.8, 2)
    keep = exclusion_mask(X8, 0.0)
    assert not keep.diagonal().any() and keep.sum() == 8 * 7
    r = 0.3
    keep = exclusion_mask(X8, r)
    for i in range(8):
        for j in range(8):
            assert keep[i, j] == (i != j and np.linalg.norm(X8[i] - X8[j]) > r)
    i = 4
    fit = fit_excluding(sample, SPEC2, H, i, r, 0)
    idx = [j for j in range(8) if keep[i, j]]
    ref = naive_nw(X8[idx], T8[idx], H, X8[i])
    assert_allclose((fit.m1_hat, fit.m2_hat), ref, atol=1e-12)
    with pytest.raises(EmptyNeighborhood):
        fit_excluding(sample, SPEC2, H, i, 2.0, 0)
    with pytest.raises(ValueError):
        exclusion_mask(X8, -1.0)


def test_dimension_mismatch():
    sample = AngularSample(X5, T5)
    with pytest.raises(ValueError, match="dimension"):
        fit_point(sample, KernelSpec(d=1), BandwidthMatrix.scalar(0.5, 1), [0.5], 0)


def test_sample_validation():
    with pytest.raises(ValueError):
        AngularSample(X5, T5[:3])
    with pytest.raises(ValueError):
        AngularSample([[np.nan, 0.0]], [0.0])
    s = AngularSample(X5, T5 + 2 * np.pi)
    assert_allclose(s.theta, T5, atol=1e-14)
    with pytest.raises(ValueError):
        s.theta[0] = 1.0
