"""Closed-form optimal solutions used as independent oracles.

Each function returns ``(x, s)`` written out by hand from the problem data,
without touching the package.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq


def problem5(eps: float):
    """Valid on (0, 1)."""
    r = np.hypot(1 - eps, eps)
    x1 = np.array([1.0, eps / r, (1 - eps) / r])
    # x^1_3 - x^2_1 = 0 and x^1_2 - x^2_2 = 1
    x2 = np.array([x1[2], x1[1] - 1.0])
    s1 = np.array([r, -eps, eps - 1.0])
    return np.concatenate([x1, x2]), np.concatenate([s1, np.zeros(2)])


def problem6(eps: float):
    """Valid for eps != 1/2."""
    r = np.sqrt(4 * eps ** 2 - 4 * eps + 2)
    x = np.array([1, (2 * eps - 1) / r, 1 / r, 2, (2 * eps - 1) / r, 2 / r])
    s = np.array([r, 1 - 2 * eps, -1, 0, 0, 0])
    return x, s


def problem8(eps: float):
    """Valid on (-1/2, 3/2) minus 1/2, where the primal solution is unique."""
    e = eps
    x = np.array([4 * e**3 - 6 * e**2 + e + 2.5,
                  4 * e**2 - 2 * e - 2,
                  -4 * e**3 + 6 * e**2 + e - 1.5,
                  -4 * e**3 + 6 * e**2 - e + 1.5,
                  6 * e - 4 * e**2,
                  4 * e**3 - 6 * e**2 - e + 1.5])
    s = np.array([0.5 * e**2 - e + 0.625, 0.5 - 0.5 * e, 0.5 * e**2 - e + 0.375,
                  0.5 * e**2 + 0.125, -0.5 * e, 0.5 * e**2 - 0.125])
    return x, s


def dual_y(A, c, cbar, eps, s):
    """``y`` from ``A'y = c + eps*cbar - s`` (A has full row rank)."""
    return np.linalg.lstsq(A.T, c + eps * cbar - s, rcond=None)[0]


def curve_extreme(curve, eps_bar: float, delta: float, direction: int,
                  limit: float):
    """Extreme ``eps`` along a unique-solution curve inside the two balls.

    ``curve(eps) -> (x, s)``; the balls are centred at ``curve(eps_bar)``.
    The distance grows monotonically along the curve for the instances we
    use, so a root bracket on ``[eps_bar, limit]`` suffices.
    """
    xb, sb = curve(eps_bar)

    def excess(e):
        x, s = curve(e)
        return max(np.linalg.norm(x - xb), np.linalg.norm(s - sb)) - delta

    if excess(limit) <= 0:
        return limit
    return brentq(excess, eps_bar, limit, xtol=1e-14) if direction > 0 else \
        brentq(excess, limit, eps_bar, xtol=1e-14)


def two_block_eigs(x):
    """Spectrum of the arrow matrix by dense symmetric eigensolver."""
    x = np.asarray(x, float)
    n = x.size
    L = np.eye(n) * x[0]
    L[0, 1:] = x[1:]
    L[1:, 0] = x[1:]
    return np.linalg.eigvalsh(L)
