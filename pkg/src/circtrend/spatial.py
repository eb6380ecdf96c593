"""Spatially correlated circular errors and the simulation scenarios.

Errors come from a wrapped Gaussian field (a real field reduced mod 2*pi)
or a projected Gaussian field (the direction of a bivariate field with
cross-covariance ``rho(d) * T``).  Both are centred to zero mean direction
before being added to the trend.
"""

from dataclasses import dataclass, field
import math
from typing import Callable, Optional, Union

import numpy as np
from scipy.spatial.distance import cdist

from .circular import arctan2, center_angles, mod2pi
from .estimators import AngularSample

__all__ = [
    "NotPSD",
    "Exponential",
    "RationalQuadratic",
    "WrappedGPSpec",
    "ProjectedGPSpec",
    "ScenarioSpec",
    "corr_eval",
    "covariance_matrix",
    "jittered_cholesky",
    "sample_gaussian_field",
    "sample_wrapped_errors",
    "sample_projected_errors",
    "projected_field",
    "regression_r1",
    "regression_r2",
    "grid_locations",
    "generate_sample",
    "replicate_rng",
]


class NotPSD(np.linalg.LinAlgError):
    """Covariance matrix could not be factorised even after jitter."""


@dataclass(frozen=True)
class Exponential:
    """``rho(t) = exp(-t / range_)``."""

    range_: float

    def __post_init__(self):
        if not self.range_ > 0:
            raise ValueError("exponential range must be positive")

    def __call__(self, dist):
        return np.exp(-np.asarray(dist, dtype=float) / self.range_)


@dataclass(frozen=True)
class RationalQuadratic:
    """``rho(t) = 1 / (1 + a t^2)``; any sample-size scaling of ``t`` is the caller's."""

    a: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("rational quadratic parameter must be positive")

    def __call__(self, dist):
        dist = np.asarray(dist, dtype=float)
        return 1.0 / (1.0 + self.a * dist * dist)


CorrelationModel = Union[Exponential, RationalQuadratic]


def corr_eval(model, dist):
    dist = np.asarray(dist, dtype=float)
    if np.any(dist < 0):
        raise ValueError("distances must be non-negative")
    out = model(dist)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class WrappedGPSpec:
    corr: CorrelationModel
    mu: float = 0.0
    sigma2: float = 1.0

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")


@dataclass(frozen=True)
class ProjectedGPSpec:
    """Bivariate field with ``T = [[sigma^2, tau*sigma], [tau*sigma, 1]]``.

    ``t_scale`` multiplies ``T`` by ``t_scale**2``; it exists to probe the
    vanishing-variance limit.
    """

    corr: CorrelationModel
    mu: tuple = (1.0, 1.0)
    sigma: float = 1.0
    tau: float = 0.9
    t_scale: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not -1.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [-1, 1]")
        if len(self.mu) != 2:
            raise ValueError("mu must be a 2-vector")
        if not self.t_scale > 0:
            raise ValueError("t_scale must be positive")

    @property
    def T(self):
        s = self.sigma
        return self.t_scale**2 * np.array([[s * s, self.tau * s], [self.tau * s, 1.0]])


def covariance_matrix(locations, model, sigma2=1.0):
    """``sigma2 * rho(||X_i - X_j||)`` for all pairs of locations."""
    X = np.atleast_2d(np.asarray(locations, dtype=float))
    return sigma2 * model(cdist(X, X))


def jittered_cholesky(M):
    """Lower Cholesky factor, adding diagonal jitter if needed.

    Jitter starts at ``1e-10`` times the mean diagonal and grows tenfold up
    to ``1e-6`` times; beyond that :class:`NotPSD` is raised.
    """
    M = np.asarray(M, dtype=float)
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        pass
    scale = float(np.mean(np.diag(M)))
    eye = np.eye(M.shape[0])
    for k in range(10, 5, -1):
        try:
            return np.linalg.cholesky(M + 10.0**-k * scale * eye)
        except np.linalg.LinAlgError:
            continue
    raise NotPSD("covariance matrix is not positive semi-definite")


def sample_gaussian_field(locations, model, sigma2, rng):
    """One zero-mean Gaussian field realisation ``L z``."""
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    L = jittered_cholesky(covariance_matrix(locations, model, sigma2))
    return L @ rng.standard_normal(L.shape[0])


def sample_wrapped_errors(locations, spec, rng, center=True):
    """Wrapped Gaussian errors ``mod2pi(mu + w)``, centred by default."""
    w = sample_gaussian_field(locations, spec.corr, spec.sigma2, rng)
    eps = np.atleast_1d(mod2pi(spec.mu + w))
    return np.atleast_1d(center_angles(eps)) if center else eps


def projected_field(locations, spec, rng):
    """Bivariate field ``Y`` (n x 2) with ``Cov(vec Y) = R kron T``.

    Uses ``chol(R kron T) = chol(R) kron chol(T)``, i.e. ``Y = L_R Z L_T^T``.
    """
    R = covariance_matrix(locations, spec.corr, 1.0)
    LR = jittered_cholesky(R)
    LT = jittered_cholesky(spec.T)
    Z = rng.standard_normal((LR.shape[0], 2))
    return np.asarray(spec.mu, dtype=float) + LR @ Z @ LT.T


def sample_projected_errors(locations, spec, rng, center=True):
    """Projected Gaussian errors ``arctan2(Y2, Y1)``, centred by default."""
    Y = projected_field(locations, spec, rng)
    eps = np.atleast_1d(arctan2(Y[:, 1], Y[:, 0]))
    return np.atleast_1d(center_angles(eps)) if center else eps


def _check_2d(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise ValueError("regression functions r1 and r2 take points in R^2")
    return x[..., 0], x[..., 1]


def regression_r1(x):
    """``arctan2(6 x1^5 - 2 x1^3 - 1, -2 x2^5 - 3 x2 - 1)``."""
    x1, x2 = _check_2d(x)
    return arctan2(6 * x1**5 - 2 * x1**3 - 1, -2 * x2**5 - 3 * x2 - 1)


def regression_r2(x):
    """``arccos(x1^5 - 1) + 1.5 arcsin(x2^3 - x2 + 1)`` on the unit square."""
    x1, x2 = _check_2d(x)
    a = x1**5 - 1
    b = x2**3 - x2 + 1
    if np.any(np.abs(a) > 1) or np.any(np.abs(b) > 1):
        raise ValueError("r2 is only defined on the unit square")
    return mod2pi(np.arccos(a) + 1.5 * np.arcsin(b))


REGRESSIONS = {"r1": regression_r1, "r2": regression_r2}


def grid_locations(n, centered=False):
    """Regular ``sqrt(n) x sqrt(n)`` grid on [0, 1]^2.

    By default the grid includes the endpoints (coordinates ``i / (k - 1)``);
    ``centered=True`` places points at cell centres ``(i + 1/2) / k``.
    """
    k = math.isqrt(n)
    if k * k != n or k < 2:
        raise ValueError(f"grid design needs a perfect square n >= 4, got {n}")
    t = (np.arange(k) + 0.5) / k if centered else np.arange(k) / (k - 1)
    g1, g2 = np.meshgrid(t, t, indexing="ij")
    return np.column_stack([g1.ravel(), g2.ravel()])


@dataclass(frozen=True)
class ScenarioSpec:
    """One simulation scenario.

    ``regression`` is ``"r1"``, ``"r2"`` or a callable mapping an (n, 2)
    array to angles.  With ``locations`` given the design is explicit;
    otherwise it is the regular unit-square grid of size ``n``.
    """

    errors: Union[WrappedGPSpec, ProjectedGPSpec]
    regression: Union[str, Callable] = "r1"
    n: int = 100
    seed: int = 0
    locations: Optional[np.ndarray] = field(default=None, compare=False)
    centered_grid: bool = False

    def __post_init__(self):
        if self.locations is None:
            grid_locations(self.n)
        else:
            if len(self.locations) != self.n:
                raise ValueError("explicit locations must have n rows")
            if self.n < 4:
                raise ValueError("scenario needs n >= 4")
        if isinstance(self.regression, str) and self.regression not in REGRESSIONS:
            raise ValueError(f"unknown regression {self.regression!r}")

    def design(self):
        if self.locations is not None:
            return np.asarray(self.locations, dtype=float)
        return grid_locations(self.n, self.centered_grid)

    def trend(self, X):
        fn = REGRESSIONS[self.regression] if isinstance(self.regression, str) else self.regression
        return np.atleast_1d(mod2pi(fn(X)))


def replicate_rng(seed, replicate=0):
    """Independent generator for a (master seed, replicate index) pair."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(replicate)]))


def generate_sample(scenario, rng=None):
    """Draw ``theta_i = mod2pi(m(X_i) + eps_i)``.

    Returns ``(sample, truth, eps)`` where ``truth`` holds ``m(X_i)``.
    """
    if rng is None:
        rng = replicate_rng(scenario.seed)
    X = scenario.design()
    truth = scenario.trend(X)
    if isinstance(scenario.errors, WrappedGPSpec):
        eps = sample_wrapped_errors(X, scenario.errors, rng)
    else:
        eps = sample_projected_errors(X, scenario.errors, rng)
    return AngularSample(X, truth + eps), truth, eps
