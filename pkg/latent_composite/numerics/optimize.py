# latent_composite/numerics/optimize.py
"""BFGS with Armijo backtracking for smooth unconstrained problems."""
from __future__ import annotations

import logging
import math
from typing import Callable, NamedTuple, Optional

import numpy as np

from latent_composite.numerics.derivatives import num_gradient

logger = logging.getLogger(__name__)

GTOL = 1e-6
FTOL = 1e-10
MAX_ITER = 500
# a stalled line search still counts as converged below this gradient norm
STALL_GTOL = 1e-4


class OptimizeResult(NamedTuple):
    x: np.ndarray
    fun: float
    converged: bool
    n_iter: int
    message: str


def _armijo(f, x, fx, g, p, c1=1e-4, max_halvings=50):
    slope = float(g @ p)
    step = 1.0
    for _ in range(max_halvings):
        x_new = x + step * p
        f_new = f(x_new)
        if math.isfinite(f_new) and f_new <= fx + c1 * step * slope:
            return step, x_new, f_new
        step /= 2.0
    return None


def minimize(
    f: Callable[[np.ndarray], float],
    x0,
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    gtol: float = GTOL,
    ftol: float = FTOL,
    max_iter: int = MAX_ITER,
) -> OptimizeResult:
    """
    Minimize f from x0. Stops when ||grad||_inf < gtol or the relative change in
    f drops below ftol; hitting max_iter returns converged=False.
    """
    grad = grad or (lambda z: num_gradient(f, z))
    x = np.asarray(x0, dtype=float).copy()
    fx = f(x)
    if not math.isfinite(fx):
        return OptimizeResult(x, fx, False, 0, "objective is not finite at the start point")
    g = grad(x)
    n = x.size
    inv_h = np.eye(n)
    scaled = False

    for it in range(1, max_iter + 1):
        if np.max(np.abs(g)) < gtol:
            return OptimizeResult(x, fx, True, it - 1, "gradient tolerance reached")

        p = -inv_h @ g
        if g @ p >= 0:
            inv_h = np.eye(n)
            p = -g
        found = _armijo(f, x, fx, g, p)
        if found is None and not np.allclose(inv_h, np.eye(n)):
            logger.debug("line search stalled at iteration %d; resetting curvature", it)
            inv_h = np.eye(n)
            p = -g
            found = _armijo(f, x, fx, g, p)
        if found is None:
            gnorm = float(np.max(np.abs(g)))
            ok = gnorm < STALL_GTOL
            return OptimizeResult(x, fx, ok, it - 1, f"line search stalled (|g|={gnorm:.2e})")

        _, x_new, f_new = found
        g_new = grad(x_new)
        s = x_new - x
        y = g_new - g
        sy = float(s @ y)

        rel = abs(fx - f_new) / max(abs(fx), abs(f_new), np.finfo(float).tiny)
        x, fx, g = x_new, f_new, g_new
        if rel < ftol:
            return OptimizeResult(x, fx, True, it, "relative function tolerance reached")

        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            if not scaled:
                inv_h = np.eye(n) * (sy / float(y @ y))
                scaled = True
            rho = 1.0 / sy
            hy = inv_h @ y
            inv_h = (
                inv_h
                - rho * (np.outer(s, hy) + np.outer(hy, s))
                + (rho * rho * float(y @ hy) + rho) * np.outer(s, s)
            )

    if np.max(np.abs(g)) < gtol:
        return OptimizeResult(x, fx, True, max_iter, "gradient tolerance reached")
    return OptimizeResult(x, fx, False, max_iter, "iteration limit reached")
