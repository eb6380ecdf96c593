"""Nelder-Mead simplex minimiser (standard coefficients 1, 2, 1/2, 1/2)."""

from dataclasses import dataclass, field

import numpy as np

__all__ = ["SimplexResult", "nelder_mead"]


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    nfev: int
    nit: int
    converged: bool
    history: list = field(default_factory=list)


def nelder_mead(func, x0, step=0.1, tol_f=1e-6, tol_x=1e-6, max_iter=None,
                alpha=1.0, gamma=2.0, rho=0.5, sigma=0.5):
    """Minimise ``func`` from ``x0``.

    The initial simplex is ``x0`` plus ``step`` along each axis (``step``
    may be a vector).  Iteration stops once the simplex diameter (max
    infinity-norm distance to the best vertex) is below ``tol_x`` or the
    spread of function values is below ``tol_f``.

    Returns
    -------
    SimplexResult
        ``history`` records every ``(x, f)`` evaluated, in order.
    """
    x0 = np.asarray(x0, dtype=float)
    k = x0.size
    if max_iter is None:
        max_iter = 500 * k
    history = []

    def f(x):
        v = float(func(x))
        history.append((x.copy(), v))
        return v

    fx0 = f(x0)
    if not np.isfinite(fx0):
        raise ValueError("objective is not finite at the starting point")
    step = np.broadcast_to(np.asarray(step, dtype=float), (k,))
    pts = [x0] + [x0 + np.eye(k)[i] * step[i] for i in range(k)]
    vals = [fx0] + [f(p) for p in pts[1:]]
    pts = np.array(pts)
    vals = np.array(vals)

    def done():
        diam = np.max(np.abs(pts[1:] - pts[0])) if k else 0.0
        return diam < tol_x or (vals[-1] - vals[0]) < tol_f

    nit = 0
    order = np.argsort(vals, kind="stable")
    pts, vals = pts[order], vals[order]
    converged = done()
    while not converged and nit < max_iter:
        nit += 1
        centroid = pts[:-1].mean(axis=0)
        xr = centroid + alpha * (centroid - pts[-1])
        fr = f(xr)
        if vals[0] <= fr < vals[-2]:
            pts[-1], vals[-1] = xr, fr
        elif fr < vals[0]:
            xe = centroid + gamma * (xr - centroid)
            fe = f(xe)
            if fe < fr:
                pts[-1], vals[-1] = xe, fe
            else:
                pts[-1], vals[-1] = xr, fr
        else:
            shrink = False
            if fr < vals[-1]:
                xc = centroid + rho * (xr - centroid)
                fc = f(xc)
                if fc <= fr:
                    pts[-1], vals[-1] = xc, fc
                else:
                    shrink = True
            else:
                xc = centroid + rho * (pts[-1] - centroid)
                fc = f(xc)
                if fc < vals[-1]:
                    pts[-1], vals[-1] = xc, fc
                else:
                    shrink = True
            if shrink:
                for i in range(1, k + 1):
                    pts[i] = pts[0] + sigma * (pts[i] - pts[0])
                    vals[i] = f(pts[i])
        order = np.argsort(vals, kind="stable")
        pts, vals = pts[order], vals[order]
        converged = done()
    return SimplexResult(pts[0].copy(), float(vals[0]), len(history), nit,
                         bool(converged), history)
