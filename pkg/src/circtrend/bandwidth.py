"""Bandwidth-matrix selection for the circular kernel estimators.

Criteria
--------
* CV: leave-one-out angular risk.
* MCV(l): leave out every observation within distance ``l`` of ``X_i``.
* CASE oracle: average angular risk against the true trend (benchmark only).

Leave-out terms whose neighbourhood is empty, or whose fitted direction is
undefined, count as the maximal risk 2 so every criterion stays finite.
"""

from dataclasses import dataclass, field
from enum import Enum
import itertools
import math
from typing import Callable, Optional

import numpy as np

from .estimators import SurfaceFit, exclusion_mask, fit_arrays
from .kernels import BandwidthMatrix
from .simplex import nelder_mead

__all__ = [
    "Criterion",
    "CriterionReport",
    "SearchShape",
    "BandwidthSearchSpace",
    "risk_terms",
    "cv_score",
    "mcv_score",
    "case_score",
    "leave_out_fits",
    "criterion_table",
    "grid_search_diagonal",
    "nelder_mead_select",
    "default_init_H",
    "radius_from_b",
    "spd_from_params",
    "params_from_spd",
]

MAX_RISK = 2.0


def radius_from_b(b):
    """Exclusion radius ``sqrt(2) * b / 10`` for integer ``b`` in [0, 10]."""
    if int(b) != b or not 0 <= b <= 10:
        raise ValueError("b must be an integer between 0 and 10")
    return math.sqrt(2.0) * int(b) / 10.0


def risk_terms(theta, fits):
    """Per-observation risks ``1 - cos(theta - m_hat)``, 2 where undefined."""
    theta = np.asarray(theta, dtype=float)
    if isinstance(fits, SurfaceFit):
        m_hat = fits.m_hat
    else:
        m_hat = np.array([f.m_hat if f.defined else np.nan for f in fits], dtype=float)
    if m_hat.shape != theta.shape:
        raise ValueError(f"length mismatch: {theta.shape[0]} angles, {m_hat.shape[0]} fits")
    risk = 1.0 - np.cos(theta - m_hat)
    return np.where(np.isnan(m_hat), MAX_RISK, risk)


def leave_out_fits(sample, spec, H, p, radius=0.0, mask=None):
    """Fits at every ``X_i`` leaving out ``i`` and its ``radius``-ball."""
    if mask is None:
        mask = exclusion_mask(sample.X, radius)
    return fit_arrays(sample, spec, H, sample.X, p, weights_mask=mask)


def mcv_score(sample, spec, H, p, radius, mask=None):
    """Modified cross-validation: sum of leave-neighbourhood-out risks."""
    if sample.n < 2:
        raise ValueError("cross-validation needs at least two observations")
    fits = leave_out_fits(sample, spec, H, p, radius, mask)
    return float(np.sum(risk_terms(sample.theta, fits)))


def cv_score(sample, spec, H, p):
    """Leave-one-out cross-validation; identical to ``mcv_score`` at radius 0."""
    return mcv_score(sample, spec, H, p, 0.0)


def case_score(truth, fits):
    """Circular average squared error of fits against the true directions."""
    return float(np.mean(risk_terms(truth, fits)))


class _Kind(str, Enum):
    CV = "cv"
    MCV = "mcv"
    CASE = "case"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class Criterion:
    """A bandwidth selection criterion.

    Use :meth:`cv`, :meth:`mcv`, :meth:`case_oracle` or :meth:`custom`.
    """

    kind: _Kind
    radius: float = 0.0
    truth: Optional[np.ndarray] = None
    func: Optional[Callable] = None
    label: str = ""
    _masks: dict = field(default_factory=dict, repr=False)

    @classmethod
    def cv(cls):
        return cls(_Kind.CV, label="CV")

    @classmethod
    def mcv(cls, radius, label=None):
        if radius < 0:
            raise ValueError("MCV radius must be non-negative")
        return cls(_Kind.MCV, radius=float(radius), label=label or f"MCV(l={radius:g})")

    @classmethod
    def mcv_b(cls, b):
        return cls.mcv(radius_from_b(b), label=f"MCV{b}")

    @classmethod
    def case_oracle(cls, truth):
        return cls(_Kind.CASE, truth=np.asarray(truth, dtype=float), label="CASE")

    @classmethod
    def custom(cls, func, label="custom"):
        """Wrap any ``BandwidthMatrix -> float`` callable."""
        return cls(_Kind.CUSTOM, func=func, label=label)

    def _mask(self, X):
        key = (X.shape, X.tobytes())
        if key not in self._masks:
            self._masks.clear()
            self._masks[key] = exclusion_mask(X, self.radius)
        return self._masks[key]

    def evaluate(self, sample, spec, H, p):
        if self.kind is _Kind.CUSTOM:
            return float(self.func(H))
        if self.kind is _Kind.CASE:
            fits = fit_arrays(sample, spec, H, sample.X, p)
            return case_score(self.truth, fits)
        return mcv_score(sample, spec, H, p, self.radius, mask=self._mask(sample.X))


@dataclass
class CriterionReport:
    chosen_H: BandwidthMatrix
    criterion_value: float
    evaluations: int
    converged: bool
    trace: list = field(default_factory=list)


class SearchShape(str, Enum):
    DIAGONAL = "diagonal"
    FULL_SPD = "full_spd"


@dataclass(frozen=True)
class BandwidthSearchSpace:
    """Per-axis candidate values for a diagonal grid search."""

    axes: tuple
    shape: SearchShape = SearchShape.DIAGONAL

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        for a in axes:
            if a.size == 0:
                raise ValueError("empty bandwidth grid")
            if np.any(a <= 0) or not np.all(np.isfinite(a)):
                raise ValueError("diagonal bandwidths must be positive and finite")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def log_grid(cls, init_H, n_points=15, lo=0.05, hi=1.5):
        """``n_points`` log-spaced values per axis over ``[lo, hi]`` times the
        diagonal of ``init_H``."""
        base = np.diag(init_H.matrix)
        return cls(tuple(np.geomspace(lo * b, hi * b, n_points) for b in base))

    def candidates(self):
        return [BandwidthMatrix.diag(v) for v in itertools.product(*self.axes)]


def criterion_table(sample, spec, p, candidates, criteria):
    """Evaluate several criteria on several candidates.

    Returns an array of shape ``(len(candidates), len(criteria))``.
    """
    out = np.empty((len(candidates), len(criteria)))
    for a, H in enumerate(candidates):
        for b, crit in enumerate(criteria):
            out[a, b] = crit.evaluate(sample, spec, H, p)
    return out


def _argmin_tiebreak(values, candidates):
    best = np.min(values)
    tied = [k for k, v in enumerate(values) if v == best]
    return min(tied, key=lambda k: (candidates[k].det, tuple(np.diag(candidates[k].matrix))))


def grid_search_diagonal(sample, spec, p, criterion, space):
    """Exhaustive search over the diagonal grid of ``space``.

    Ties go to the smallest determinant, then to the lexicographically
    smallest diagonal.
    """
    if space.shape is not SearchShape.DIAGONAL:
        raise ValueError("grid search needs a diagonal search space")
    candidates = space.candidates()
    values = criterion_table(sample, spec, p, candidates, [criterion])[:, 0]
    k = _argmin_tiebreak(values, candidates)
    trace = list(zip(candidates, values.tolist()))
    return CriterionReport(candidates[k], float(values[k]), len(candidates), True, trace)


def spd_from_params(theta, d):
    """Map ``d(d+1)/2`` reals to an SPD matrix via a Cholesky factor with
    log-diagonal."""
    L = np.zeros((d, d))
    L[np.tril_indices(d)] = theta
    L[np.diag_indices(d)] = np.exp(np.diag(L))
    H = L @ L.T
    return BandwidthMatrix(0.5 * (H + H.T))


def params_from_spd(H):
    L = np.linalg.cholesky(H.matrix)
    L[np.diag_indices(H.d)] = np.log(np.diag(L))
    return L[np.tril_indices(H.d)]


def nelder_mead_select(sample, spec, p, criterion, init_H, tol_f=1e-6, tol_x=1e-6,
                       max_iter=None, keep_trace=True):
    """Minimise a criterion over full SPD bandwidth matrices.

    The simplex lives on the Cholesky factor of ``H`` with log-transformed
    diagonal, so every vertex is a valid bandwidth matrix.
    """
    d = init_H.d
    theta0 = params_from_spd(init_H)
    tri = np.tril_indices(d)
    on_diag = tri[0] == tri[1]
    scale = float(np.min(np.exp(theta0[on_diag])))
    step = np.where(on_diag, 0.1, 0.1 * scale)

    def objective(theta):
        return criterion.evaluate(sample, spec, spd_from_params(theta, d), p)

    if not np.isfinite(objective(theta0)):
        raise ValueError("criterion is not finite at the initial bandwidth")
    res = nelder_mead(objective, theta0, step=step, tol_f=tol_f, tol_x=tol_x,
                      max_iter=max_iter)
    trace = [(spd_from_params(x, d), v) for x, v in res.history] if keep_trace else []
    return CriterionReport(spd_from_params(res.x, d), res.fun, res.nfev + 1,
                           res.converged, trace)


def default_init_H(sample):
    """``1.5 * diag(sd(X_1), ..., sd(X_d))`` with the n-1 divisor."""
    X = sample.X if hasattr(sample, "X") else np.asarray(sample, dtype=float)
    if X.shape[0] < 2:
        raise ValueError("need at least two locations for a default bandwidth")
    sd = np.std(X, axis=0, ddof=1)
    if np.any(sd == 0):
        raise ValueError("a coordinate has zero variance; cannot build a default bandwidth")
    return BandwidthMatrix.diag(1.5 * sd)
