"""Nadaraya-Watson (p=0) and local-linear (p=1) circular regression.

The sine and cosine of the responses are smoothed separately with the
same kernel weights and recombined with ``arctan2``.  All estimators are
built on :func:`local_components`, which works on a whole matrix of
kernel weights at once (one row per evaluation point).
"""

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .circular import TWO_PI, mod2pi
from .kernels import KernelSpec, kernel_weights

__all__ = [
    "EmptyNeighborhood",
    "Fallback",
    "AngularSample",
    "FitResult",
    "SurfaceFit",
    "local_components",
    "nw_components",
    "ll_components",
    "fit_point",
    "fit_surface",
    "fit_arrays",
    "fit_excluding",
    "exclusion_mask",
]

PIVOT_RTOL = 1e-10
_CHUNK = 256


class EmptyNeighborhood(ValueError):
    """No observation receives positive kernel weight at the evaluation point."""


class Fallback(IntEnum):
    NONE = 0
    LL_FELL_BACK_TO_NW = 1
    UNDEFINED = 2


@dataclass(frozen=True)
class AngularSample:
    """Locations ``X`` (n x d) paired with angles ``theta`` (normalised)."""

    X: np.ndarray
    theta: np.ndarray
    sin: np.ndarray = field(init=False, repr=False, compare=False)
    cos: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        theta = np.atleast_1d(np.array(self.theta, dtype=float))
        if X.ndim != 2 or X.shape[0] < 1:
            raise ValueError("X must be a non-empty (n, d) array")
        if theta.shape != (X.shape[0],):
            raise ValueError("theta must have one angle per row of X")
        if not np.all(np.isfinite(X)):
            raise ValueError("locations must be finite")
        theta = np.atleast_1d(mod2pi(theta))
        for arr in (X, theta):
            arr.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "theta", theta)
        s, c = np.sin(theta), np.cos(theta)
        s.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "sin", s)
        object.__setattr__(self, "cos", c)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    def subset(self, idx):
        return AngularSample(self.X[idx], self.theta[idx])

    def rotated(self, c):
        return AngularSample(self.X, self.theta + c)


@dataclass(frozen=True)
class FitResult:
    point: np.ndarray
    m_hat: float
    m1_hat: float
    m2_hat: float
    resultant: float
    p: int
    fallback: Fallback = Fallback.NONE

    @property
    def defined(self):
        return self.fallback is not Fallback.UNDEFINED


@dataclass(frozen=True)
class SurfaceFit:
    """Column-oriented fits: arrays indexed by evaluation point.

    ``m_hat`` is NaN where ``fallback == Fallback.UNDEFINED``.
    """

    points: np.ndarray
    m_hat: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    fallback: np.ndarray
    p: int

    @property
    def resultant(self):
        return np.hypot(self.m1, self.m2)

    @property
    def defined(self):
        return self.fallback != Fallback.UNDEFINED

    def __len__(self):
        return len(self.m_hat)

    def to_results(self):
        res = self.resultant
        return [FitResult(self.points[k], float(self.m_hat[k]), float(self.m1[k]),
                          float(self.m2[k]), float(res[k]), self.p,
                          Fallback(int(self.fallback[k])))
                for k in range(len(self))]


def _chol_solve_first(A, B):
    """First row of ``A^{-1} B`` for a stack of small SPD systems.

    ``A`` has shape (m, q, q), ``B`` shape (m, q, r).  Returns the solution's
    first row (m, r) and a boolean mask of systems judged singular: a
    Cholesky pivot below ``PIVOT_RTOL`` times the largest diagonal entry.
    """
    m, q, _ = A.shape
    L = np.zeros_like(A)
    scale = np.max(np.diagonal(A, axis1=1, axis2=2), axis=1)
    singular = ~(scale > 0)
    for k in range(q):
        piv = A[:, k, k] - np.sum(L[:, k, :k] ** 2, axis=1)
        bad = ~(piv > PIVOT_RTOL * scale)
        singular |= bad
        piv = np.where(bad, 1.0, piv)
        L[:, k, k] = np.sqrt(piv)
        for i in range(k + 1, q):
            L[:, i, k] = (A[:, i, k] - np.sum(L[:, i, :k] * L[:, k, :k], axis=1)) / L[:, k, k]
    y = np.zeros_like(B)
    for k in range(q):
        y[:, k] = (B[:, k] - np.einsum("mj,mjr->mr", L[:, k, :k], y[:, :k])) / L[:, k, k, None]
    beta = np.zeros_like(B)
    for k in range(q - 1, -1, -1):
        beta[:, k] = (y[:, k] - np.einsum("mj,mjr->mr", L[:, k + 1:, k], beta[:, k + 1:])) \
            / L[:, k, k, None]
    return beta[:, 0], singular


def local_components(W, X, points, S, C, p):
    """Local polynomial fits of ``S`` and ``C`` for each row of weights.

    Parameters
    ----------
    W : ndarray, shape (m, n)
        Non-negative weights, row ``k`` belonging to ``points[k]``.
    X : ndarray, shape (n, d)
    points : ndarray, shape (m, d)
    S, C : ndarray, shape (n,)
        Sine and cosine responses.
    p : {0, 1}

    Returns
    -------
    m1, m2 : ndarray, shape (m,)
        NaN where a row has no positive weight.
    fallback : ndarray of Fallback codes
    """
    if p not in (0, 1):
        raise ValueError("degree p must be 0 or 1")
    W = np.asarray(W, dtype=float)
    m = W.shape[0]
    sw = W.sum(axis=1)
    empty = ~(sw > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        m1 = (W @ S) / sw
        m2 = (W @ C) / sw
    fallback = np.full(m, Fallback.NONE, dtype=np.int8)
    if p == 1 and m:
        d = X.shape[1]
        diff = X[None, :, :] - points[:, None, :]
        Z = np.concatenate([np.ones(diff.shape[:2] + (1,)), diff], axis=2)
        WZ = W[:, :, None] * Z
        A = np.einsum("mnk,mnl->mkl", WZ, Z)
        B = np.einsum("mnk,nr->mkr", WZ, np.column_stack([S, C]))
        beta, singular = _chol_solve_first(A, B)
        singular |= np.count_nonzero(W > 0, axis=1) < d + 1
        ok = ~singular & ~empty
        m1 = np.where(ok, beta[:, 0], m1)
        m2 = np.where(ok, beta[:, 1], m2)
        fallback[~ok & ~empty] = Fallback.LL_FELL_BACK_TO_NW
    fallback[empty] = Fallback.UNDEFINED
    return m1, m2, fallback


def _combine(points, m1, m2, fallback, p):
    fallback = fallback.copy()
    with np.errstate(invalid="ignore"):
        zero = ~(np.hypot(m1, m2) > 1e-300)
    fallback[zero] = Fallback.UNDEFINED
    m_hat = np.full(len(m1), np.nan)
    good = fallback != Fallback.UNDEFINED
    m_hat[good] = np.mod(np.arctan2(m1[good], m2[good]), TWO_PI)
    m_hat[m_hat >= TWO_PI] = 0.0
    return SurfaceFit(points, m_hat, m1, m2, fallback, p)


def _check(sample, spec, H):
    if spec.d != sample.d or H.d != sample.d:
        raise ValueError(f"dimension mismatch: data d={sample.d}, kernel d={spec.d}, "
                         f"bandwidth d={H.d}")


def fit_arrays(sample, spec, H, points, p, weights_mask=None):
    """Fit at many points and return a :class:`SurfaceFit`.

    ``weights_mask`` (m x n, boolean or 0/1) multiplies the kernel weights,
    which is how leave-out variants are expressed.  Points are processed in
    chunks so memory stays bounded on large grids.
    """
    _check(sample, spec, H)
    points = np.asarray(points, dtype=float).reshape(-1, sample.d)
    m = points.shape[0]
    m1 = np.empty(m)
    m2 = np.empty(m)
    fb = np.empty(m, dtype=np.int8)
    for start in range(0, m, _CHUNK):
        sl = slice(start, min(start + _CHUNK, m))
        W = kernel_weights(spec, H, sample.X, points[sl])
        if weights_mask is not None:
            W = W * weights_mask[sl]
        m1[sl], m2[sl], fb[sl] = local_components(W, sample.X, points[sl],
                                                  sample.sin, sample.cos, p)
    return _combine(points, m1, m2, fb, p)


def nw_components(sample, spec, H, x):
    """Kernel-weighted means of ``sin(theta)`` and ``cos(theta)`` at ``x``.

    Raises
    ------
    EmptyNeighborhood
        If every weight ``K_H(X_i - x)`` is zero.
    """
    fit = fit_arrays(sample, spec, H, x, 0)
    if np.isnan(fit.m1[0]):
        raise EmptyNeighborhood(f"no observation in the kernel support at {x}")
    return float(fit.m1[0]), float(fit.m2[0])


def ll_components(sample, spec, H, x):
    """Local-linear fits of the sine and cosine components at ``x``.

    Returns ``(m1, m2, fallback)``.  When the weighted normal matrix is
    numerically singular, the Nadaraya-Watson values are returned and
    ``fallback`` is ``Fallback.LL_FELL_BACK_TO_NW``.
    """
    fit = fit_arrays(sample, spec, H, x, 1)
    if np.isnan(fit.m1[0]):
        raise EmptyNeighborhood(f"no observation in the kernel support at {x}")
    return float(fit.m1[0]), float(fit.m2[0]), Fallback(int(fit.fallback[0]))


def fit_point(sample, spec, H, x, p):
    """Circular regression estimate at a single point.

    Raises
    ------
    EmptyNeighborhood
    """
    fit = fit_arrays(sample, spec, H, x, p)
    if np.isnan(fit.m1[0]):
        raise EmptyNeighborhood(f"no observation in the kernel support at {x}")
    return fit.to_results()[0]


def fit_surface(sample, spec, H, grid, p):
    """Fit at every grid point; empty neighbourhoods come back flagged."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        return []
    return fit_arrays(sample, spec, H, grid, p).to_results()


def exclusion_mask(X, radius):
    """Boolean (n x n) mask, True where observation j may be used for point i.

    Observation ``i`` itself is always excluded.  For ``radius > 0`` every
    ``j`` with ``||X_j - X_i|| <= radius`` is excluded as well; ``radius == 0``
    is plain leave-one-out.
    """
    if radius < 0:
        raise ValueError("exclusion radius must be non-negative")
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if radius > 0:
        dist = np.sqrt(np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=-1))
        keep = dist > radius
    else:
        keep = np.ones((n, n), dtype=bool)
    np.fill_diagonal(keep, False)
    return keep


def fit_excluding(sample, spec, H, i, radius, p):
    """Estimate at ``X_i`` without observation ``i`` and its ``radius``-ball."""
    keep = exclusion_mask(sample.X, radius)[i]
    if not keep.any():
        raise EmptyNeighborhood(f"every observation excluded around point {i}")
    sub = sample.subset(np.flatnonzero(keep))
    return fit_point(sub, spec, H, sample.X[i], p)
