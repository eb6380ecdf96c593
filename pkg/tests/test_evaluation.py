import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from circtrend.estimators import AngularSample, fit_arrays
from circtrend.evaluation import (MonteCarloPlan, SplitSpec, prediction_error, residual_table,
                                  run_monte_carlo, selector_criterion, train_test_split,
                                  worker_count)
from circtrend.kernels import BandwidthMatrix, KernelSpec
from circtrend.spatial import Exponential, ScenarioSpec, WrappedGPSpec

SPEC2 = KernelSpec(d=2)
X4 = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])


def _exact_fits(theta):
    s = AngularSample(X4, theta)
    return fit_arrays(s, SPEC2, BandwidthMatrix.scalar(0.01, 2), X4, 0)


def test_prediction_error():
    theta = np.array([0.2, 1.0, 3.0, 5.5])
    assert prediction_error(theta, _exact_fits(theta)) == pytest.approx(0, abs=1e-15)
    assert prediction_error(theta, _exact_fits(theta + np.pi)) == pytest.approx(8.0, abs=1e-13)
    preds = np.array([0.5, 0.9, 2.0, 0.1])
    hand = sum(1 - math.cos(a - b) for a, b in zip(theta, preds))
    assert prediction_error(theta, _exact_fits(preds)) == pytest.approx(hand, abs=1e-14)
    with pytest.raises(ValueError):
        prediction_error(theta[:2], _exact_fits(preds))


def test_prediction_error_nonnegative():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.uniform(0, 2 * np.pi, 4)
        b = rng.uniform(0, 2 * np.pi, 4)
        assert prediction_error(a, _exact_fits(b)) >= 0


def test_split_sizes_and_determinism():
    s = AngularSample(np.random.default_rng(1).uniform(size=(10, 2)), np.zeros(10))
    tr, te, i_tr, i_te = train_test_split(s, SplitSpec(0.9, seed=3))
    assert (tr.n, te.n) == (9, 1)
    _, _, j_tr, j_te = train_test_split(s, SplitSpec(0.9, seed=3))
    assert np.array_equal(i_tr, j_tr) and np.array_equal(i_te, j_te)
    assert sorted(np.concatenate([i_tr, i_te]).tolist()) == list(range(10))
    big = AngularSample(np.random.default_rng(2).uniform(size=(1494, 2)), np.zeros(1494))
    tr, te, _, _ = train_test_split(big, SplitSpec(0.9))
    assert (tr.n, te.n) == (1345, 149)
    with pytest.raises(ValueError):
        SplitSpec(1.0)
    with pytest.raises(ValueError):
        train_test_split(AngularSample(X4[:2], [0, 0]), SplitSpec(0.9))


def test_residual_table():
    theta = np.array([0.2, 1.0, 3.0, 6.2])
    assert_allclose(residual_table(AngularSample(X4, theta), _exact_fits(theta)), 0, atol=1e-14)
    res = residual_table(AngularSample(X4, theta), _exact_fits(theta + 0.1))
    assert_allclose(res, -0.1, atol=1e-12)
    fits = _exact_fits([0.5, 0.5, 0.5, 0.5])
    expected = [((t - 0.5 + math.pi) % (2 * math.pi)) - math.pi for t in theta]
    assert_allclose(residual_table(AngularSample(X4, theta), fits), expected, atol=1e-14)
    far = fit_arrays(AngularSample(X4, theta), SPEC2, BandwidthMatrix.scalar(0.01, 2),
                     np.full((4, 2), 5.0), 0)
    assert np.all(np.isnan(residual_table(AngularSample(X4, theta), far)))
    with pytest.raises(ValueError):
        residual_table(AngularSample(X4[:3], theta[:3]), fits)


def test_selector_names():
    assert selector_criterion("cv").label == "CV"
    assert selector_criterion("MCV2").radius == pytest.approx(math.sqrt(2) * 0.2)
    assert selector_criterion("CASE", truth=[0.0]).label == "CASE"
    with pytest.raises(ValueError):
        selector_criterion("foo")


def test_worker_count(monkeypatch):
    monkeypatch.delenv("CIRCTREND_THREADS", raising=False)
    assert worker_count() == 1
    monkeypatch.setenv("CIRCTREND_THREADS", "3")
    assert worker_count() == 3
    assert worker_count(2) == 2


def _small_plan(**kw):
    base = dict(scenario=ScenarioSpec(WrappedGPSpec(Exponential(0.1)), "r1", 49),
                replicates=3, master_seed=5, grid_points=6)
    base.update(kw)
    return MonteCarloPlan(**base)


def test_monte_carlo_determinism_and_dominance():
    plan = _small_plan()
    a = run_monte_carlo(plan)
    b = run_monte_carlo(plan)
    assert a.to_csv() == b.to_csv()
    for rec in a.records:
        assert rec.ok, rec.error
        assert all(rec.case["CASE"] <= v for v in rec.case.values())
    rows = a.summary()
    assert [r["selector"] for r in rows] == list(plan.selectors)
    assert all(r["failures"] == 0 and r["replicates"] == 3 for r in rows)


def test_monte_carlo_independent_of_workers():
    plan = _small_plan(replicates=2, p=1)
    assert run_monte_carlo(plan, workers=1).to_csv() == run_monte_carlo(plan, workers=2).to_csv()


def test_zero_noise_oracle():
    quiet = ScenarioSpec(WrappedGPSpec(Exponential(0.1), sigma2=1e-20), "r1", 100)
    res = run_monte_carlo(MonteCarloPlan(quiet, replicates=1, selectors=("CASE",), grid_points=10))
    assert res.mean_case("CASE") < 1e-3


def test_failures_are_counted():
    def broken(X):
        raise RuntimeError("boom")

    plan = _small_plan(scenario=ScenarioSpec(WrappedGPSpec(Exponential(0.1)), broken, 49),
                       replicates=2)
    res = run_monte_carlo(plan)
    assert all("boom" in r.error for r in res.records)
    assert res.summary()[0]["failures"] == 2
    assert math.isnan(res.mean_case("CV"))


def test_plan_validation():
    with pytest.raises(ValueError):
        _small_plan(replicates=0)
    with pytest.raises(ValueError):
        _small_plan(p=2)
    with pytest.raises(ValueError):
        _small_plan(selectors=("CV", "XYZ"))
