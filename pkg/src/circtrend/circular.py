"""Circular arithmetic on angles stored in radians.

Angles live in [0, 2*pi); signed residuals live in (-pi, pi].  Every
function accepts scalars or array-likes and returns the matching shape.
"""

import numpy as np

TWO_PI = 2.0 * np.pi

__all__ = [
    "UndefinedDirection",
    "mod2pi",
    "arctan2",
    "angular_risk",
    "circular_mean",
    "resultant_length",
    "center_angles",
    "signed_residual",
]


class UndefinedDirection(ArithmeticError):
    """Raised when a direction is requested for the zero vector."""


def _finite(x, name="angle"):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} must be finite")
    return x


def mod2pi(x):
    """Reduce angles to [0, 2*pi).

    Parameters
    ----------
    x : float or array_like
        Angles in radians. Must be finite.

    Returns
    -------
    float or ndarray
    """
    x = _finite(x)
    out = np.mod(x, TWO_PI)
    # np.mod can return exactly 2*pi for tiny negative inputs
    out = np.where(out >= TWO_PI, 0.0, out)
    return float(out) if out.ndim == 0 else out


def arctan2(y, x):
    """Direction of the vector ``(x, y)`` in [0, 2*pi).

    Raises
    ------
    UndefinedDirection
        If any ``(x, y)`` pair is the origin.
    """
    y = _finite(y, "y")
    x = _finite(x, "x")
    if np.any((x == 0.0) & (y == 0.0)):
        raise UndefinedDirection("arctan2 is undefined at the origin")
    return mod2pi(np.arctan2(y, x))


def angular_risk(a, b):
    """Angular risk ``1 - cos(a - b)``, in [0, 2]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = 1.0 - np.cos(a - b)
    return float(out) if out.ndim == 0 else out


def _mean_components(angles):
    angles = _finite(angles)
    if angles.size == 0:
        raise ValueError("circular mean of an empty sample")
    return np.mean(np.sin(angles)), np.mean(np.cos(angles))


def circular_mean(angles):
    """Mean direction of a sample of angles.

    Computed as ``arctan2(mean(sin), mean(cos))``.

    Raises
    ------
    ValueError
        For an empty sample.
    UndefinedDirection
        When the mean resultant vector is exactly zero.
    """
    s, c = _mean_components(angles)
    return arctan2(s, c)


def resultant_length(angles):
    """Mean resultant length of a sample, in [0, 1]."""
    s, c = _mean_components(angles)
    return float(np.hypot(s, c))


def center_angles(angles):
    """Rotate a sample so that its mean direction is zero.

    Each angle becomes ``mod2pi(angle - circular_mean(angles))``.
    """
    angles = _finite(angles)
    return mod2pi(angles - circular_mean(angles))


def signed_residual(theta, fitted):
    """Signed angular difference ``theta - fitted`` mapped into (-pi, pi]."""
    d = mod2pi(np.asarray(theta, dtype=float) - np.asarray(fitted, dtype=float))
    d = np.asarray(d)
    out = np.where(d > np.pi, d - TWO_PI, d)
    return float(out) if out.ndim == 0 else out
