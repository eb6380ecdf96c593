import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize

from circtrend.simplex import nelder_mead


def rosenbrock(x):
    return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2


def test_rosenbrock_matches_reference_optimiser():
    res = nelder_mead(rosenbrock, [-1.2, 1.0], step=0.5, tol_f=1e-14, tol_x=1e-10)
    ref = minimize(rosenbrock, [-1.2, 1.0], method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 10000})
    assert res.converged
    np.testing.assert_allclose(res.x, [1, 1], atol=1e-6)
    np.testing.assert_allclose(res.x, ref.x, atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=4), st.floats(0.1, 10))
def test_separable_quadratic(center, scale):
    c = np.array(center)
    res = nelder_mead(lambda x: scale * np.sum((x - c) ** 2), np.zeros_like(c), step=1.0,
                      tol_f=1e-16, tol_x=1e-9)
    assert res.converged
    np.testing.assert_allclose(res.x, c, atol=1e-6)


def test_history_and_counts():
    res = nelder_mead(lambda x: float(x[0] ** 2), [3.0])
    assert res.nfev == len(res.history)
    assert res.fun == min(v for _, v in res.history)
    assert res.history[0][0][0] == 3.0


def test_iteration_cap():
    res = nelder_mead(rosenbrock, [-1.2, 1.0], tol_f=0, tol_x=0, max_iter=5)
    assert res.nit == 5 and not res.converged


def test_non_finite_start():
    with pytest.raises(ValueError):
        nelder_mead(lambda x: np.inf, [0.0])


def test_flat_function_converges_immediately():
    res = nelder_mead(lambda x: 1.0, [0.0, 0.0])
    assert res.converged and res.nit == 0 and res.nfev == 3
