# latent_composite/numerics/linalg.py
from __future__ import annotations

import logging

import numpy as np

logger = logging.getLogger(__name__)

PD_EPS = 1e-8


class NotPositiveDefiniteError(ValueError):
    def __init__(self, min_eigenvalue: float):
        super().__init__(f"matrix is not positive definite (min eigenvalue {min_eigenvalue:.3g})")
        self.min_eigenvalue = min_eigenvalue


class AsymmetricMatrixError(ValueError):
    def __init__(self, max_asymmetry: float):
        super().__init__(f"matrix is not symmetric (max |m - m.T| = {max_asymmetry:.3g})")
        self.max_asymmetry = max_asymmetry


def cholesky(m) -> np.ndarray:
    """Lower-triangular factor L with L @ L.T == m."""
    m = np.asarray(m, dtype=float)
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        min_eig = float(np.linalg.eigvalsh((m + m.T) / 2.0)[0]) if np.all(np.isfinite(m)) else float("nan")
        raise NotPositiveDefiniteError(min_eig) from None


def nearest_pd(m, eps: float = PD_EPS) -> np.ndarray:
    """
    Closest symmetric matrix (Frobenius norm) whose eigenvalues are all >= eps.
    Inputs that are already safely PD come back unchanged.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    asym = float(np.max(np.abs(m - m.T))) if m.size else 0.0
    if asym > 1e-10 * max(1.0, float(np.max(np.abs(m)))):
        raise AsymmetricMatrixError(asym)

    sym = (m + m.T) / 2.0
    vals, vecs = np.linalg.eigh(sym)
    if vals[0] >= eps / 2.0:
        return sym

    logger.warning(
        "matrix not positive definite (min eigenvalue %.3g); clipping %d eigenvalue(s) at %.1g",
        vals[0],
        int(np.sum(vals < eps)),
        eps,
    )
    repaired = (vecs * np.maximum(vals, eps)) @ vecs.T
    return (repaired + repaired.T) / 2.0


def inverse_pd(m) -> tuple[np.ndarray, bool]:
    """
    Inverse of a symmetric matrix through its Cholesky factor, repairing it
    with nearest_pd first when the factorization fails. Returns (inverse, repaired).
    """
    repaired = False
    try:
        chol = cholesky(m)
    except NotPositiveDefiniteError:
        repaired = True
        chol = cholesky(nearest_pd(m))
    eye = np.eye(chol.shape[0])
    inv_l = np.linalg.solve(chol, eye)
    inv = inv_l.T @ inv_l
    return (inv + inv.T) / 2.0, repaired
