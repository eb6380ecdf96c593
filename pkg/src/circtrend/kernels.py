"""Multivariate kernels and bandwidth matrices.

``K_H(u) = |H|^{-1} K(H^{-1} u)`` for a symmetric positive-definite
bandwidth matrix ``H``.  Three kernel families are provided; the product
triweight is the default.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
import math
import re

import numpy as np
from scipy import integrate, special

__all__ = [
    "KernelFamily",
    "KernelSpec",
    "KernelMoments",
    "BandwidthMatrix",
    "kernel_eval",
    "kernel_H_eval",
    "kernel_weights",
    "kernel_moments",
    "parse_bandwidth",
]


class KernelFamily(str, Enum):
    PRODUCT_TRIWEIGHT = "product_triweight"
    SPHERICAL_TRIWEIGHT = "spherical_triweight"
    PRODUCT_EPANECHNIKOV = "product_epanechnikov"


_TRIWEIGHT_1D = 35.0 / 32.0
_EPAN_1D = 0.75


def _sphere_area(d):
    # surface area of the unit sphere S^{d-1}
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _spherical_triweight_const(d):
    # int_{|u|<=1} (1-|u|^2)^3 du = area * B(d/2, 4) / 2
    return 1.0 / (_sphere_area(d) * 0.5 * special.beta(d / 2.0, 4.0))


def _profile(family, u):
    """Evaluate the unscaled kernel on rows of ``u`` (shape (..., d))."""
    if family is KernelFamily.PRODUCT_TRIWEIGHT:
        t = np.clip(1.0 - u * u, 0.0, None)
        return np.prod(_TRIWEIGHT_1D * t**3, axis=-1)
    if family is KernelFamily.PRODUCT_EPANECHNIKOV:
        t = np.clip(1.0 - u * u, 0.0, None)
        return np.prod(_EPAN_1D * t, axis=-1)
    d = u.shape[-1]
    t = np.clip(1.0 - np.sum(u * u, axis=-1), 0.0, None)
    return _spherical_triweight_const(d) * t**3


@lru_cache(maxsize=None)
def _check_normalized(family, d):
    if d > 3:
        return
    if family is KernelFamily.SPHERICAL_TRIWEIGHT:
        # radial integral of the coded profile along the first axis
        def radial(r):
            u = np.zeros((1, d))
            u[0, 0] = r
            return _sphere_area(d) * r ** (d - 1) * _profile(family, u)[0]
        total, _ = integrate.quad(radial, 0.0, 1.0)
    else:
        def marginal(t):
            u = np.zeros((1, d))
            u[0, 0] = t
            return _profile(family, u)[0]
        # the product factorises: the d-fold integral is the d-th power of
        # the marginal integral rescaled by K(0,...)'s remaining factors
        rest = _profile(family, np.zeros((1, d)))[0] / _profile(
            family, np.zeros((1, 1)))[0]
        one, _ = integrate.quad(marginal, -1.0, 1.0)
        total = (one / rest) ** d
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"{family.value} kernel in d={d} integrates to {total}")


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family in a fixed dimension."""

    family: KernelFamily = KernelFamily.PRODUCT_TRIWEIGHT
    d: int = 2

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        if int(self.d) != self.d or self.d < 1:
            raise ValueError("kernel dimension must be a positive integer")
        _check_normalized(self.family, int(self.d))

    @property
    def is_product(self):
        return self.family is not KernelFamily.SPHERICAL_TRIWEIGHT


@dataclass(frozen=True)
class KernelMoments:
    mu2: float
    nu0: float


class BandwidthMatrix:
    """Symmetric positive-definite smoothing matrix.

    Parameters
    ----------
    H : array_like, shape (d, d)
        Must be exactly symmetric and pass a Cholesky factorisation.
    """

    __slots__ = ("_H", "_inv", "_det", "_chol")

    def __init__(self, H):
        H = np.array(H, dtype=float)
        if H.ndim == 0:
            H = H.reshape(1, 1)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError("bandwidth matrix must be square")
        if not np.all(np.isfinite(H)):
            raise ValueError("bandwidth matrix must be finite")
        if not np.array_equal(H, H.T):
            raise ValueError("bandwidth matrix must be symmetric")
        try:
            self._chol = np.linalg.cholesky(H)
        except np.linalg.LinAlgError:
            raise ValueError("bandwidth matrix must be positive definite") from None
        if np.any(np.diag(self._chol) <= 0):
            raise ValueError("bandwidth matrix must be positive definite")
        H.setflags(write=False)
        self._H = H
        self._inv = np.linalg.inv(H)
        self._inv = 0.5 * (self._inv + self._inv.T)
        self._det = float(np.prod(np.diag(self._chol)) ** 2)

    @classmethod
    def diag(cls, values):
        return cls(np.diag(np.atleast_1d(np.asarray(values, dtype=float))))

    @classmethod
    def scalar(cls, h, d):
        return cls(h * np.eye(d))

    @property
    def matrix(self):
        return self._H

    @property
    def d(self):
        return self._H.shape[0]

    @property
    def inv(self):
        return self._inv

    @property
    def det(self):
        return self._det

    @property
    def is_diagonal(self):
        return np.count_nonzero(self._H - np.diag(np.diag(self._H))) == 0

    def scaled(self, c):
        return BandwidthMatrix(c * self._H)

    def __eq__(self, other):
        return isinstance(other, BandwidthMatrix) and np.array_equal(self._H, other._H)

    def __hash__(self):
        return hash(self._H.tobytes())

    def __repr__(self):
        return f"BandwidthMatrix({self._H.tolist()!r})"

    def format(self, digits=4):
        """Render as aligned rows with ``digits`` decimals."""
        rows = ["  ".join(f"{v:.{digits}f}" for v in row) for row in self._H]
        return "\n".join(rows)


_H_GRAMMAR = ("expected 'diag:h1,...,hd', 'full:a11,a12,...,add' (row-major, "
              "d*d entries) or 'scalar:h,d'")


def parse_bandwidth(text, d=None):
    """Parse a bandwidth string such as ``"diag:0.2,0.3"``.

    Accepted forms are ``diag:h1,...,hd``, ``full:a11,...,add`` (row-major)
    and ``scalar:h,d``.
    """
    m = re.fullmatch(r"\s*(diag|full|scalar)\s*:\s*(.+?)\s*", text or "")
    if not m:
        raise ValueError(f"malformed bandwidth {text!r}: {_H_GRAMMAR}")
    kind, body = m.groups()
    try:
        vals = [float(v) for v in body.split(",")]
    except ValueError:
        raise ValueError(f"malformed bandwidth {text!r}: {_H_GRAMMAR}") from None
    try:
        if kind == "diag":
            H = BandwidthMatrix.diag(vals)
        elif kind == "scalar":
            if len(vals) != 2 or vals[1] != int(vals[1]) or vals[1] < 1:
                raise ValueError("scalar form needs 'scalar:h,d'")
            H = BandwidthMatrix.scalar(vals[0], int(vals[1]))
        else:
            k = math.isqrt(len(vals))
            if k * k != len(vals):
                raise ValueError("full form needs a square number of entries")
            H = BandwidthMatrix(np.array(vals).reshape(k, k))
    except ValueError as exc:
        raise ValueError(f"malformed bandwidth {text!r}: {exc}; {_H_GRAMMAR}") from None
    if d is not None and H.d != d:
        raise ValueError(f"bandwidth has dimension {H.d}, data has {d}")
    return H


def kernel_eval(spec, u):
    """Evaluate ``K(u)``; ``u`` has shape ``(d,)`` or ``(m, d)``."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != spec.d:
        raise ValueError(f"expected vectors of length {spec.d}, got {u.shape[-1]}")
    out = _profile(spec.family, u)
    return float(out) if out.ndim == 0 else out


def kernel_H_eval(spec, H, u):
    """Evaluate ``K_H(u) = |H|^{-1} K(H^{-1} u)``."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != spec.d or H.d != spec.d:
        raise ValueError("dimension mismatch between kernel, bandwidth and u")
    out = _profile(spec.family, u @ H.inv) / H.det
    return float(out) if out.ndim == 0 else out


def kernel_weights(spec, H, X, points):
    """Matrix of weights ``K_H(X_j - x_i)``, one row per evaluation point.

    Returns an array of shape ``(len(points), len(X))``.  For diagonal ``H``
    and a product kernel, observations outside the support box of a point
    are skipped.
    """
    X = np.asarray(X, dtype=float)
    points = np.asarray(points, dtype=float)
    diff = X[None, :, :] - points[:, None, :]
    if H.is_diagonal and spec.is_product:
        h = np.diag(H.matrix)
        u = diff / h
        inside = np.all(np.abs(u) < 1.0, axis=-1)
        w = np.zeros(inside.shape)
        w[inside] = _profile(spec.family, u[inside]) / H.det
        return w
    return _profile(spec.family, diff @ H.inv) / H.det


def kernel_moments(spec):
    """Second moment ``mu2`` and roughness ``nu0 = int K^2``."""
    d = spec.d
    if spec.family is KernelFamily.PRODUCT_TRIWEIGHT:
        return KernelMoments(mu2=1.0 / 9.0, nu0=(350.0 / 429.0) ** d)
    if spec.family is KernelFamily.PRODUCT_EPANECHNIKOV:
        return KernelMoments(mu2=0.2, nu0=0.6**d)
    c = _spherical_triweight_const(d)
    area = _sphere_area(d)
    mu2 = c * area * 0.5 * special.beta((d + 2) / 2.0, 4.0) / d
    nu0 = c * c * area * 0.5 * special.beta(d / 2.0, 7.0)
    return KernelMoments(mu2=float(mu2), nu0=float(nu0))
