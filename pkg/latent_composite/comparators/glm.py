# latent_composite/comparators/glm.py
from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.special import expit

logger = logging.getLogger(__name__)

IRLS_TOL = 1e-8
IRLS_MAX_ITER = 100
# coefficients beyond this size on the logit scale signal separation
SEPARATION_BOUND = 25.0


class GlmFit(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    coefficients: np.ndarray
    covariance: np.ndarray
    converged: bool
    deviance: float
    n_iter: int = 0
    separated: bool = False
    # residual standard deviation (ML) for Gaussian fits
    scale: Optional[float] = None
    note: Optional[str] = None


def logistic_fit(
    design,
    response,
    tol: float = IRLS_TOL,
    max_iter: int = IRLS_MAX_ITER,
) -> GlmFit:
    """Logistic regression by iteratively reweighted least squares."""
    x = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    n, k = x.shape
    beta = np.zeros(k)
    converged = False
    separated = False
    note = None
    info = np.eye(k)

    it = 0
    for it in range(1, max_iter + 1):
        p = expit(x @ beta)
        w = p * (1.0 - p)
        info = x.T @ (x * w[:, None])
        try:
            step = np.linalg.solve(info, x.T @ (y - p))
        except np.linalg.LinAlgError:
            separated = True
            note = "singular information matrix; coefficients diverging (separation)"
            break
        beta = beta + step
        if np.max(np.abs(beta)) > SEPARATION_BOUND:
            separated = True
            note = f"coefficient magnitude exceeded {SEPARATION_BOUND:g}; coefficients diverging (separation)"
            break
        if np.max(np.abs(step)) < tol:
            converged = True
            break

    p = expit(x @ beta)
    w = p * (1.0 - p)
    info = x.T @ (x * w[:, None])
    try:
        cov = np.linalg.inv(info)
        cov = (cov + cov.T) / 2.0
    except np.linalg.LinAlgError:
        cov = np.full((k, k), np.nan)
    if np.any(~np.isfinite(cov)) or np.any(np.diag(cov) < 0):
        cov = np.full((k, k), np.nan)

    with np.errstate(divide="ignore"):
        ll = np.sum(y * np.log(np.maximum(p, 1e-300)) + (1.0 - y) * np.log(np.maximum(1.0 - p, 1e-300)))
    if separated:
        logger.warning("logistic fit: %s", note)
    elif not converged:
        note = f"IRLS did not converge in {max_iter} iterations"
    return GlmFit(
        coefficients=beta,
        covariance=cov,
        converged=converged and not separated,
        deviance=float(-2.0 * ll),
        n_iter=it,
        separated=separated,
        note=note,
    )


def linear_fit(design, response) -> GlmFit:
    """
    Least squares with maximum-likelihood residual SD; covariance of the
    coefficients is sigma^2 (X'X)^-1.
    """
    x = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    n = x.shape[0]
    xtx = x.T @ x
    beta = np.linalg.solve(xtx, x.T @ y)
    resid = y - x @ beta
    rss = float(resid @ resid)
    sigma = math.sqrt(rss / n)
    cov = sigma * sigma * np.linalg.inv(xtx)
    return GlmFit(
        coefficients=beta,
        covariance=(cov + cov.T) / 2.0,
        converged=True,
        deviance=rss,
        scale=sigma,
    )
