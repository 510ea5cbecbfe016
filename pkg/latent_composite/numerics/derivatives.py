# latent_composite/numerics/derivatives.py
from __future__ import annotations

from typing import Callable, Optional

import numpy as np


def default_steps(x: np.ndarray) -> np.ndarray:
    return np.maximum(1e-5, 1e-5 * np.abs(x))


def _steps(x: np.ndarray, h) -> np.ndarray:
    if h is None:
        return default_steps(x)
    return np.broadcast_to(np.asarray(h, dtype=float), x.shape).copy()


def num_gradient(f: Callable[[np.ndarray], float], x, h=None) -> np.ndarray:
    """Central-difference gradient."""
    x = np.asarray(x, dtype=float)
    h = _steps(x, h)
    g = np.empty_like(x)
    xp = x.copy()
    for i in range(x.size):
        xp[i] = x[i] + h[i]
        fp = f(xp)
        xp[i] = x[i] - h[i]
        fm = f(xp)
        xp[i] = x[i]
        g[i] = (fp - fm) / (2.0 * h[i])
    return g


def num_hessian(
    f: Callable[[np.ndarray], float],
    x,
    h=None,
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> np.ndarray:
    """
    Central-difference Hessian, symmetrized as (H + H.T) / 2.

    With `grad` the columns are differences of gradients; otherwise the
    four-point second difference of f is used.
    """
    x = np.asarray(x, dtype=float)
    h = _steps(x, h)
    n = x.size
    hess = np.empty((n, n))
    xp = x.copy()

    if grad is not None:
        for i in range(n):
            xp[i] = x[i] + h[i]
            gp = grad(xp)
            xp[i] = x[i] - h[i]
            gm = grad(xp)
            xp[i] = x[i]
            hess[:, i] = (gp - gm) / (2.0 * h[i])
        return (hess + hess.T) / 2.0

    f0 = f(x)
    for i in range(n):
        xp[i] = x[i] + h[i]
        fp = f(xp)
        xp[i] = x[i] - h[i]
        fm = f(xp)
        xp[i] = x[i]
        hess[i, i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i])
        for j in range(i):
            total = 0.0
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                xp[i] = x[i] + si * h[i]
                xp[j] = x[j] + sj * h[j]
                total += si * sj * f(xp)
            xp[i], xp[j] = x[i], x[j]
            hess[i, j] = hess[j, i] = total / (4.0 * h[i] * h[j])
    return (hess + hess.T) / 2.0
