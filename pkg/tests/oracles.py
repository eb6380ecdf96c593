"""Slow, independently written reference implementations used by the tests."""

import math

import numpy as np


def triweight_product(u):
    out = 1.0
    for v in u:
        if abs(v) >= 1:
            return 0.0
        out *= 35.0 / 32.0 * (1 - v * v) ** 3
    return out


def kernel_H(H, u):
    H = np.asarray(H, dtype=float)
    return triweight_product(np.linalg.solve(H, u)) / abs(np.linalg.det(H))


def naive_fit(X, theta, H, x, p):
    """Direction estimate at ``x`` from plain loops and a dense solver.

    Returns None when the neighbourhood is empty or the direction undefined.
    """
    w = np.array([kernel_H(H, np.asarray(Xi) - x) for Xi in X])
    if not np.any(w > 0):
        return None
    s = np.sin(theta)
    c = np.cos(theta)
    d = np.asarray(X).shape[1]
    if p == 1:
        Z = np.column_stack([np.ones(len(X)), np.asarray(X) - x])
        A = Z.T @ (w[:, None] * Z)
        # same degeneracy rule as the library: too few weights or near-singular
        if np.count_nonzero(w) < d + 1 or np.linalg.eigvalsh(A)[0] < 1e-10 * A.diagonal().max():
            p = 0
    if p == 0:
        m1 = sum(wi * si for wi, si in zip(w, s)) / w.sum()
        m2 = sum(wi * ci for wi, ci in zip(w, c)) / w.sum()
    else:
        m1 = np.linalg.solve(A, Z.T @ (w * s))[0]
        m2 = np.linalg.solve(A, Z.T @ (w * c))[0]
    if m1 == 0 and m2 == 0:
        return None
    return math.atan2(m1, m2) % (2 * math.pi)


def naive_mcv(X, theta, H, p, radius):
    X = np.asarray(X, dtype=float)
    total = 0.0
    for i in range(len(X)):
        keep = [j for j in range(len(X))
                if j != i and math.dist(X[i], X[j]) > radius]
        fit = naive_fit(X[keep], theta[keep], H, X[i], p) if keep else None
        total += 2.0 if fit is None else 1 - math.cos(theta[i] - fit)
    return total
