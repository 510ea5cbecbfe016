# latent_composite/model/fit.py
from __future__ import annotations

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import ndtr, ndtri

from latent_composite.core.params import (
    N_MEAN,
    UnconstrainedParams,
    n_params,
    structural_to_params,
    unpack,
)
from latent_composite.core.records import Dataset
from latent_composite.core.results import FitResult
from latent_composite.model.likelihood import loglik_vector
from latent_composite.numerics.derivatives import num_hessian
from latent_composite.numerics.linalg import inverse_pd
from latent_composite.numerics.optimize import minimize

logger = logging.getLogger(__name__)

MIN_PATIENTS = 30


class InsufficientDataError(ValueError):
    def __init__(self, n_usable: int, n_required: int, arms: tuple[int, int]):
        super().__init__(
            f"need at least {n_required} patients in both arms, got {n_usable} "
            f"(control={arms[0]}, treated={arms[1]})"
        )
        self.n_usable = n_usable
        self.n_required = n_required
        self.arms = arms


class FitOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_iter: int = Field(default=500, ge=1)
    gtol: float = Field(default=1e-6, gt=0)
    ftol: float = Field(default=1e-10, ge=0)
    min_patients: int = Field(default=MIN_PATIENTS, ge=1)
    seed: int = 0
    restart_noise: float = Field(default=0.1, ge=0)


def check_analyzable(data: Dataset, min_patients: int = MIN_PATIENTS) -> None:
    arms = data.arm_counts()
    if data.n < min_patients or min(arms) == 0:
        raise InsufficientDataError(data.n, min_patients, arms)


def _ols(design: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return coef, float(np.sqrt(np.mean(resid**2)))


def _clipped_probit(successes: float, n: float) -> float:
    p = np.clip(successes / n, 0.5 / n, 1.0 - 0.5 / n)
    return float(ndtri(p))


def _ordered_probit_start(y3: np.ndarray, treat: np.ndarray, k3: int) -> np.ndarray:
    """(gamma1, tau1, log increments) from an ordered probit of y3 on treatment."""
    n = y3.size
    cum = np.array([np.sum(y3 <= w) for w in range(1, k3)], dtype=float)
    props = np.clip(cum / n, 0.5 / n, 1.0 - 0.5 / n)
    tau = np.maximum.accumulate(ndtri(props))
    steps = np.maximum(np.diff(tau), 0.05)
    x0 = np.concatenate([[0.0, tau[0]], np.log(steps)])

    def negll(z):
        g1 = z[0]
        cuts = np.cumsum(np.concatenate([z[1:2], np.exp(np.clip(z[2:], -30, 30))]))
        ext = np.concatenate([[-np.inf], cuts, [np.inf]])
        m = g1 * treat
        prob = ndtr(ext[y3] - m) - ndtr(ext[y3 - 1] - m)
        return -float(np.sum(np.log(np.maximum(prob, 1e-300)))) / n

    res = minimize(negll, x0, max_iter=200)
    return res.x if np.all(np.isfinite(res.x)) else x0


def starting_values(data: Dataset) -> np.ndarray:
    """
    Separate least-squares fits for the continuous outcomes, an ordered probit
    for y3 and a probit for y4; every correlation starts at zero.
    """
    c = data.columns
    ones = np.ones(data.n)
    t = c.treat.astype(float)
    a, s1 = _ols(np.column_stack([ones, t, c.y10]), c.y1)
    b, s2 = _ols(np.column_stack([ones, t, c.y20]), c.y2)
    ordinal = _ordered_probit_start(c.y3, t, data.k3)

    arm0 = c.treat == 0
    p0 = _clipped_probit(c.y4[arm0].sum(), arm0.sum())
    p1 = _clipped_probit(c.y4[~arm0].sum(), (~arm0).sum())

    x0 = np.zeros(n_params(data.k3))
    x0[:N_MEAN] = [a[0], a[1], a[2], b[0], b[1], b[2], ordinal[0], p0, p1 - p0]
    pos = N_MEAN
    x0[pos : pos + data.k3 - 1] = ordinal[1:]
    pos += data.k3 - 1
    x0[pos : pos + 2] = np.log([max(s1, 1e-3), max(s2, 1e-3)])
    return x0


def fit(data: Dataset, opts: FitOptions | None = None) -> FitResult:
    """Maximum-likelihood fit of the latent model with a numerical-Hessian covariance."""
    opts = opts or FitOptions()
    check_analyzable(data, opts.min_patients)
    cols = data.columns
    k3 = data.k3
    n = data.n

    def objective(x):
        return -loglik_vector(x, k3, cols).loglik / n

    x0 = starting_values(data)
    res = minimize(objective, x0, gtol=opts.gtol, ftol=opts.ftol, max_iter=opts.max_iter)
    if not res.converged:
        logger.warning("latent fit did not converge (%s); restarting from a perturbed start", res.message)
        rng = np.random.default_rng(opts.seed)
        noise = rng.uniform(-opts.restart_noise, opts.restart_noise, size=x0.size)
        retry = minimize(objective, x0 + noise, gtol=opts.gtol, ftol=opts.ftol, max_iter=opts.max_iter)
        if retry.converged or retry.fun < res.fun:
            res = retry
        if not res.converged:
            logger.warning("latent fit still not converged after restart: %s", res.message)

    x_hat = res.x
    value = loglik_vector(x_hat, k3, cols)

    hess = num_hessian(lambda z: -loglik_vector(z, k3, cols).loglik, x_hat)
    if np.all(np.isfinite(hess)):
        cov, repaired = inverse_pd(hess)
    else:
        cov, repaired = np.full(hess.shape, np.nan), True
    if repaired:
        logger.warning("negative Hessian not positive definite at the optimum; used nearest-PD repair")

    return FitResult(
        params_hat=structural_to_params(unpack(x_hat, k3)),
        unconstrained_hat=UnconstrainedParams.from_array(x_hat),
        cov_unconstrained=cov,
        loglik=value.loglik,
        converged=res.converged,
        n_iter=res.n_iter,
        hessian_repaired=repaired,
        cell_floor_hit=value.cell_floor_hit,
        n_patients=n,
        message=res.message,
    )
