"""Asymptotic quantities for the circular kernel estimators.

Given the true trend ``m``, design density ``f``, error concentration
``ell(x) = E[cos(eps) | X = x]`` and the correlation constants, this module
evaluates the leading variance term, the AMSE for p = 0 and p = 1, the
locally optimal bandwidth matrix, and the covariance expressions for the
sine and cosine component regressions.  These are oracles: nothing here is
estimated from data.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .circular import signed_residual
from .kernels import BandwidthMatrix

__all__ = [
    "IndefiniteCurvature",
    "TrueModelOracle",
    "ComponentFunctions",
    "AppendixCovariances",
    "gradient",
    "hessian",
    "asymptotic_variance",
    "curvature_matrix",
    "amse",
    "h_opt_local",
    "appendix_covariances",
    "variance_identity_check",
]

_EPS = np.finfo(float).eps
EIG_FLOOR = 1e-12


class IndefiniteCurvature(ValueError):
    """The curvature matrix is neither positive nor negative definite."""


def _steps(x, power):
    return _EPS**power * np.maximum(1.0, np.abs(x))


def gradient(fn, x, angular=False):
    """Central finite-difference gradient.

    With ``angular=True`` differences of ``fn`` are wrapped into (-pi, pi],
    so angle-valued functions can be differentiated across the 0/2*pi seam.
    """
    x = np.asarray(x, dtype=float)
    h = _steps(x, 1.0 / 3.0)
    g = np.empty(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h[i]
        hi, lo = fn(x + e), fn(x - e)
        diff = signed_residual(hi, lo) if angular else hi - lo
        g[i] = diff / (2 * h[i])
    return g


def hessian(fn, x, angular=False):
    """Central finite-difference Hessian (step ``eps**(1/4)`` scale)."""
    x = np.asarray(x, dtype=float)
    k = x.size
    h = _steps(x, 0.25)
    f0 = fn(x)

    def delta(y):
        return signed_residual(fn(y), f0) if angular else fn(y) - f0

    Hm = np.empty((k, k))
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h[i]
        Hm[i, i] = (delta(x + ei) + delta(x - ei)) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(k)
            ej[j] = h[j]
            v = (delta(x + ei + ej) - delta(x + ei - ej)
                 - delta(x - ei + ej) + delta(x - ei - ej)) / (4 * h[i] * h[j])
            Hm[i, j] = Hm[j, i] = v
    return Hm


@dataclass(frozen=True)
class TrueModelOracle:
    """True-model ingredients.

    ``m``, ``f`` and ``ell`` map a point (1-d array) to a float.  Derivative
    callables are optional; missing ones are computed by finite differences.
    ``rho_c`` holds the limits ``n * int rho_{k,n}`` for the sine, cosine and
    cross correlations.
    """

    m: Callable
    f: Callable
    ell: Callable
    sigma1_2: float
    sigma2_2: float = 0.0
    sigma12: float = 0.0
    rho_c: tuple = (0.0, 0.0, 0.0)
    grad_m: Optional[Callable] = None
    hess_m: Optional[Callable] = None
    grad_f: Optional[Callable] = None
    grad_ell: Optional[Callable] = None

    def __post_init__(self):
        if self.sigma1_2 < 0 or self.sigma2_2 < 0:
            raise ValueError("variances must be non-negative")
        if len(self.rho_c) != 3:
            raise ValueError("rho_c must have three entries")

    def _fl(self, x):
        fx, lx = float(self.f(x)), float(self.ell(x))
        if not fx > 0:
            raise ValueError(f"design density must be positive at {x}")
        if not lx > 0:
            raise ValueError(f"ell must be positive at {x}")
        return fx, lx

    def dm(self, x):
        return np.asarray(self.grad_m(x), float) if self.grad_m else gradient(self.m, x, angular=True)

    def d2m(self, x):
        return np.asarray(self.hess_m(x), float) if self.hess_m else hessian(self.m, x, angular=True)

    def df(self, x):
        return np.asarray(self.grad_f(x), float) if self.grad_f else gradient(self.f, x)

    def dell(self, x):
        return np.asarray(self.grad_ell(x), float) if self.grad_ell else gradient(self.ell, x)


def _variance_numerator(oracle, fx):
    return oracle.sigma1_2 * (1.0 + fx * oracle.rho_c[0])


def asymptotic_variance(oracle, x, n, H, nu0):
    """Leading conditional variance (the same for p = 0 and p = 1)."""
    x = np.asarray(x, dtype=float)
    fx, lx = oracle._fl(x)
    return nu0 * _variance_numerator(oracle, fx) / (n * H.det * lx**2 * fx)


def curvature_matrix(oracle, x, p):
    """Bias curvature matrix: ``B(x)`` for p = 0, ``G(x)`` for p = 1.

    ``B = (ell f)^{-1} [grad(ell f) grad(m)^T + grad(m) grad(ell f)^T] + Hess(m)``;
    ``G`` replaces ``ell f`` by ``ell``.
    """
    x = np.asarray(x, dtype=float)
    fx, lx = oracle._fl(x)
    gm = oracle.dm(x)
    gl = oracle.dell(x)
    if p == 0:
        g = lx * oracle.df(x) + fx * gl
        w = lx * fx
    elif p == 1:
        g, w = gl, lx
    else:
        raise ValueError("p must be 0 or 1")
    outer = np.outer(g, gm)
    return (outer + outer.T) / w + oracle.d2m(x)


def amse(oracle, x, n, H, p, moments):
    """``mu2^2 tr^2(H^2 M) / 4 + variance`` with ``M`` from :func:`curvature_matrix`."""
    M = curvature_matrix(oracle, x, p)
    H2 = H.matrix @ H.matrix
    bias = 0.5 * moments.mu2 * np.trace(H2 @ M)
    return bias**2 + asymptotic_variance(oracle, x, n, H, moments.nu0)


def h_opt_local(oracle, x, n, p, moments):
    """Locally AMSE-optimal bandwidth ``h* M~^{-1/2}``.

    ``M~`` is the curvature matrix or its negative, whichever is positive
    definite.

    Raises
    ------
    IndefiniteCurvature
        If the curvature matrix has eigenvalues of both signs or near zero.
    """
    x = np.asarray(x, dtype=float)
    M = curvature_matrix(oracle, x, p)
    M = 0.5 * (M + M.T)
    lam, V = np.linalg.eigh(M)
    floor = EIG_FLOOR * max(1.0, np.max(np.abs(lam)))
    if np.all(lam > floor):
        pass
    elif np.all(lam < -floor):
        lam = -lam
    else:
        raise IndefiniteCurvature(f"curvature eigenvalues {lam} are not of one sign")
    d = x.size
    fx, lx = oracle._fl(x)
    det = float(np.prod(lam))
    h_star = (moments.nu0 * np.sqrt(det) * _variance_numerator(oracle, fx)
              / (n * d * moments.mu2**2 * lx**2 * fx)) ** (1.0 / (d + 4))
    root_inv = (V / np.sqrt(lam)) @ V.T
    Hm = h_star * root_inv
    return BandwidthMatrix(0.5 * (Hm + Hm.T))


@dataclass(frozen=True)
class ComponentFunctions:
    """``f1 = sin(m)`` and ``f2 = cos(m)`` as callables."""

    f1: Callable
    f2: Callable

    @classmethod
    def from_trend(cls, m):
        return cls(lambda x: float(np.sin(m(x))), lambda x: float(np.cos(m(x))))

    @classmethod
    def constant(cls, f1, f2):
        return cls(lambda x: f1, lambda x: f2)


@dataclass(frozen=True)
class AppendixCovariances:
    c: float
    C1: float
    C2: float
    C3: float
    s1_2: float
    s2_2: float


def appendix_covariances(comp, oracle, x):
    """Variances and covariances of the sine/cosine component errors at ``x``."""
    a, b = comp.f1(x), comp.f2(x)
    s1, s2, s12 = oracle.sigma1_2, oracle.sigma2_2, oracle.sigma12
    r1, r2, r3 = oracle.rho_c
    return AppendixCovariances(
        c=a * b * s2 - a * a * s12 + b * b * s12 - a * b * s1,
        C1=a * a * s2 * r2 + 2 * a * b * s12 * r3 + b * b * s1 * r1,
        C2=b * b * s2 * r2 - 2 * a * b * s12 * r3 + a * a * s1 * r1,
        C3=a * b * s2 * r2 - a * a * s12 * r3 + b * b * s12 * r3 - a * b * s1 * r1,
        s1_2=a * a * s2 + 2 * a * b * s12 + b * b * s1,
        s2_2=b * b * s2 - 2 * b * a * s12 + a * a * s1,
    )


def variance_identity_check(comp, oracle, x, m1, m2):
    """Absolute defect of the identity reducing the delta-method variance.

    ``m1^2 (s2^2 + f C2) + m2^2 (s1^2 + f C1) - 2 m1 m2 (c + f C3)`` should
    equal ``ell^2 sigma1^2 (1 + f rho_c1)`` when ``m_j = f_j * ell``.
    """
    cov = appendix_covariances(comp, oracle, x)
    fx = float(oracle.f(x))
    lx = float(oracle.ell(x))
    lhs = (m1 * m1 * (cov.s2_2 + fx * cov.C2) + m2 * m2 * (cov.s1_2 + fx * cov.C1)
           - 2 * m1 * m2 * (cov.c + fx * cov.C3))
    rhs = lx * lx * _variance_numerator(oracle, fx)
    return abs(lhs - rhs)
