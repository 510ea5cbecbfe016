# latent_composite/gof.py
"""
Modified Pearson residuals for the latent model: each patient's observed
4-vector (ordinal on its 1..k3 coding) is whitened with the model-implied
covariance of the observed outcomes and compared against chi-square(4).
"""
from __future__ import annotations

import logging
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.special import roots_hermitenorm
from scipy.stats import chi2

from latent_composite.core.params import LatentParams, sigma_matrix
from latent_composite.core.records import Dataset, PatientRecord
from latent_composite.core.results import FitResult
from latent_composite.model.likelihood import cell_probabilities
from latent_composite.numerics.bvn import phi2_rectangle
from latent_composite.numerics.linalg import NotPositiveDefiniteError, cholesky, nearest_pd
from latent_composite.numerics.mvn import conditional_34

logger = logging.getLogger(__name__)

QUAD_TOL = 1e-6
START_NODES = 24
MAX_NODES = 96


class QuadratureError(RuntimeError):
    def __init__(self, error: float, nodes: int):
        super().__init__(f"covariance quadrature did not reach {QUAD_TOL:g} (change {error:.3g} at {nodes} nodes)")
        self.error = error
        self.nodes = nodes


class GofResult(NamedTuple):
    residuals: np.ndarray
    statistics: np.ndarray
    total: float
    mean_statistic: float
    n_exceed: int
    threshold: float
    repaired: bool


def _marginal_cells(p: LatentParams, mu3: float, mu4: float) -> np.ndarray:
    """P(Y3 = w, Y4 = k) at the marginal latent means; shape (k3, 2)."""
    cuts = np.concatenate([[-np.inf], p.tau3, [np.inf]])
    r34 = p.rho[5]
    out = np.empty((p.k3, 2))
    for k, (lo, hi) in enumerate(((-np.inf, 0.0), (0.0, np.inf))):
        out[:, k] = phi2_rectangle(cuts[:-1] - mu3, cuts[1:] - mu3, lo - mu4, hi - mu4, r34)
    return out


def discrete_moments(p: LatentParams, treat: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of (Y3, Y4) in one arm."""
    cells = _marginal_cells(p, p.gamma1 * treat, p.psi0 + p.psi1 * treat)
    levels = np.arange(1, p.k3 + 1, dtype=float)
    p3 = cells.sum(axis=1)
    e3 = float(levels @ p3)
    e4 = float(cells[:, 1].sum())
    v3 = float(levels**2 @ p3) - e3 * e3
    v4 = e4 * (1.0 - e4)
    c34 = float(levels @ cells[:, 1]) - e3 * e4
    return np.array([e3, e4]), np.array([[v3, c34], [c34, v4]])


def _cross_covariance(p: LatentParams, treat: int, nodes: int) -> np.ndarray:
    """Cov((Y1, Y2), (Y3, Y4)) by tensor Gauss-Hermite over the continuous pair."""
    x, w = roots_hermitenorm(nodes)
    w = w / np.sqrt(2.0 * np.pi)
    z1, z2 = np.meshgrid(x, x, indexing="ij")
    weight = np.outer(w, w).ravel()
    s = sigma_matrix(p)
    chol = np.linalg.cholesky(s[:2, :2])
    y = chol @ np.vstack([z1.ravel(), z2.ravel()])

    mu3 = p.gamma1 * treat
    mu4 = p.psi0 + p.psi1 * treat
    cond = conditional_34(p, y[0], y[1], 0.0, 0.0, mu3, mu4)
    cells = cell_probabilities(p, cond)
    levels = np.arange(1, p.k3 + 1, dtype=float)
    g3 = cells.sum(axis=2) @ levels
    g4 = cells[:, :, 1].sum(axis=1)
    g = np.vstack([g3, g4])
    # continuous means are zero here, so E[y g] is the covariance
    return (y * weight) @ g.T


@lru_cache(maxsize=256)
def _arm_moments(p: LatentParams, treat: int, max_nodes: int = MAX_NODES) -> tuple[np.ndarray, np.ndarray]:
    mean_dis, cov_dis = discrete_moments(p, treat)

    nodes = START_NODES
    prev = _cross_covariance(p, treat, nodes)
    change = np.inf
    while nodes < max_nodes:
        nodes = min(2 * nodes, max_nodes)
        cur = _cross_covariance(p, treat, nodes)
        change = float(np.max(np.abs(cur - prev)))
        logger.debug("cross-covariance quadrature: %d nodes, change %.3g", nodes, change)
        prev = cur
        if change <= QUAD_TOL:
            break
    if change > QUAD_TOL:
        raise QuadratureError(change, nodes)

    sigma = np.zeros((4, 4))
    sigma[:2, :2] = sigma_matrix(p)[:2, :2]
    sigma[2:, 2:] = cov_dis
    sigma[:2, 2:] = prev
    sigma[2:, :2] = prev.T
    return mean_dis, sigma


def fitted_moments(p: LatentParams, rec: PatientRecord, max_nodes: int = MAX_NODES) -> tuple[np.ndarray, np.ndarray]:
    """Model mean and covariance of the observed (y1, y2, y3, y4) for one patient."""
    mean_dis, sigma = _arm_moments(p, rec.treat, max_nodes)
    mu = p.means(rec.treat, rec.y10, rec.y20)
    return np.array([mu[0], mu[1], mean_dis[0], mean_dis[1]]), sigma.copy()


def modified_pearson_residuals(
    fit: FitResult,
    data: Dataset,
    level: float = 0.95,
    max_nodes: int = MAX_NODES,
) -> GofResult:
    p = fit.params_hat
    c = data.columns
    observed = np.column_stack([c.y1, c.y2, c.y3.astype(float), c.y4.astype(float)])
    mu = p.means(c.treat, c.y10, c.y20)

    fitted = np.empty_like(observed)
    residuals = np.empty_like(observed)
    repaired = False
    for arm in (0, 1):
        rows = c.treat == arm
        if not rows.any():
            continue
        mean_dis, sigma = _arm_moments(p, arm, max_nodes)
        try:
            chol = cholesky(sigma)
        except NotPositiveDefiniteError:
            logger.warning("observed-outcome covariance not positive definite in arm %d; repairing", arm)
            chol = cholesky(nearest_pd(sigma))
            repaired = True
        fitted[rows, :2] = mu[rows, :2]
        fitted[rows, 2:] = mean_dis
        residuals[rows] = np.linalg.solve(chol, (observed[rows] - fitted[rows]).T).T

    stats = np.sum(residuals**2, axis=1)
    threshold = float(chi2.ppf(level, df=4))
    return GofResult(
        residuals=residuals,
        statistics=stats,
        total=float(stats.sum()),
        mean_statistic=float(stats.mean()),
        n_exceed=int(np.sum(stats > threshold)),
        threshold=threshold,
        repaired=repaired,
    )


__all__ = [
    "GofResult",
    "QuadratureError",
    "discrete_moments",
    "fitted_moments",
    "modified_pearson_residuals",
]
