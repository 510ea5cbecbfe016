# latent_composite/inference.py
"""
Responder probabilities from the latent model and the population-averaged
treatment effects built on them, with delta-method standard errors taken in
the unconstrained coordinates where the fit covariance lives.
"""
from __future__ import annotations

import logging
import math
from typing import NamedTuple, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import ndtr, ndtri

from latent_composite.core.params import LatentParams, Structural, build_sigma, mean_structure, unpack
from latent_composite.core.records import Dataset, ResponderRule
from latent_composite.core.results import EffectEstimate, FitResult, Scale
from latent_composite.numerics.mvn import MvnResult, batch_order, phi4_batch

logger = logging.getLogger(__name__)

EFFECT_STEP = 1e-5


class QmcSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_points: int = Field(default=20_000, ge=1)
    n_shifts: int = Field(default=8, ge=1)
    seed: int = 20240607


DEFAULT_QMC = QmcSettings()
# cheaper budget for the finite-difference sweep only; point estimates use the full one
JACOBIAN_QMC = QmcSettings(n_points=2048)


class DegenerateOddsError(ValueError):
    def __init__(self, arm: str, probability: float):
        super().__init__(f"mean response probability in the {arm} arm is {probability:.6g}; odds are undefined")
        self.arm = arm
        self.probability = probability


class ArmMeans(NamedTuple):
    """Mean responder probability per arm and its Jacobian wrt the fitted vector."""

    p_treat: float
    p_control: float
    jac_treat: np.ndarray
    jac_control: np.ndarray


def _rectangle(s: Structural, treat, y10, y20, rule: ResponderRule):
    mu = mean_structure(s.coef, treat, y10, y20)
    mu = np.atleast_2d(mu)
    sigma = build_sigma(s.sigma, s.rho)
    theta3 = rule.theta3_latent(s.tau)

    if rule.theta4_level is None:
        theta4 = np.inf
    else:
        theta4 = 0.0
    if rule.theta4_level == 1:
        # P(Y4* >= 0) is P(-Y4* <= 0)
        flip = np.array([1.0, 1.0, 1.0, -1.0])
        mu = mu * flip
        sigma = sigma * np.outer(flip, flip)

    upper = np.array([rule.theta1, rule.theta2, theta3, theta4], dtype=float)
    return np.broadcast_to(upper, mu.shape), mu, sigma


def response_probabilities(
    p: LatentParams | Structural,
    treat,
    y10,
    y20,
    rule: ResponderRule,
    qmc: QmcSettings = DEFAULT_QMC,
    order: Optional[Sequence[int]] = None,
) -> MvnResult:
    """Per-patient responder probabilities for covariate arrays."""
    s = p if isinstance(p, Structural) else _structural(p)
    upper, mu, sigma = _rectangle(s, treat, y10, y20, rule)
    return phi4_batch(
        upper, mu, sigma, n_points=qmc.n_points, n_shifts=qmc.n_shifts, seed=qmc.seed, order=order
    )


def response_prob(
    p: LatentParams,
    treat: int,
    y10: float,
    y20: float,
    rule: ResponderRule,
    qmc: QmcSettings = DEFAULT_QMC,
) -> float:
    """Probability that a patient with these covariates meets every responder criterion."""
    res = response_probabilities(p, treat, y10, y20, rule, qmc)
    return float(res.probability[0])


def _structural(p: LatentParams) -> Structural:
    return Structural(
        coef=p.mean_coefficients(),
        tau=np.asarray(p.tau3, dtype=float),
        sigma=np.array([p.sigma1, p.sigma2]),
        rho=np.asarray(p.rho, dtype=float),
    )


def arm_means(
    x: np.ndarray,
    k3: int,
    data: Dataset,
    rule: ResponderRule,
    qmc: QmcSettings = DEFAULT_QMC,
    step: float = EFFECT_STEP,
    with_jacobian: bool = True,
    jacobian_qmc: Optional[QmcSettings] = JACOBIAN_QMC,
) -> ArmMeans:
    """
    Counterfactual mean responder probabilities over the analysis set, every
    patient evaluated once as treated and once as control.

    The means come from `qmc`; the Jacobian columns are central differences
    evaluated with `jacobian_qmc` (or `qmc` when None). Both share the seed
    and the variable order frozen at `x`.
    """
    c = data.columns
    ones = np.ones(data.n)
    base = unpack(x, k3)
    upper, mu, sigma = _rectangle(base, ones, c.y10, c.y20, rule)
    order = batch_order(np.full(upper.shape, -np.inf), upper, mu, sigma)

    def means(z, budget: QmcSettings):
        s = unpack(z, k3)
        p1 = response_probabilities(s, ones, c.y10, c.y20, rule, budget, order).probability
        p0 = response_probabilities(s, 0 * ones, c.y10, c.y20, rule, budget, order).probability
        return np.array([p1.mean(), p0.mean()])

    m = means(x, qmc)
    sweep = jacobian_qmc if jacobian_qmc is not None else qmc
    jac = np.full((2, x.size), np.nan)
    if with_jacobian:
        z = x.astype(float).copy()
        for j in range(x.size):
            z[j] = x[j] + step
            up = means(z, sweep)
            z[j] = x[j] - step
            down = means(z, sweep)
            z[j] = x[j]
            jac[:, j] = (up - down) / (2.0 * step)
    return ArmMeans(float(m[0]), float(m[1]), jac[0], jac[1])


def wald(
    estimate: float,
    grad: np.ndarray,
    cov: np.ndarray,
    alpha: float = 0.05,
) -> tuple[float, float, float, float]:
    """(se, ci_low, ci_high, p_value) for a delta-method estimate."""
    var = float(grad @ cov @ grad)
    if not math.isfinite(var):
        return math.nan, math.nan, math.nan, math.nan
    se = math.sqrt(max(var, 0.0))
    z = float(ndtri(1.0 - alpha / 2.0))
    if se == 0.0:
        p = 1.0 if estimate == 0.0 else 0.0
    else:
        p = float(2.0 * ndtr(-abs(estimate) / se))
    return se, estimate - z * se, estimate + z * se, p


def _check_odds(m: ArmMeans) -> None:
    for arm, prob in (("treated", m.p_treat), ("control", m.p_control)):
        if not 0.0 < prob < 1.0:
            raise DegenerateOddsError(arm, prob)


def effects_from_means(
    m: ArmMeans,
    cov: np.ndarray,
    scales: Sequence[Scale] = ("odds-ratio", "risk-difference", "risk-ratio"),
    alpha: float = 0.05,
    method: str = "latent",
    converged: bool = True,
    note: Optional[str] = None,
) -> dict[str, EffectEstimate]:
    """Odds-ratio, risk-difference and risk-ratio estimates from arm means and their Jacobian."""
    p1, p0 = m.p_treat, m.p_control
    out: dict[str, EffectEstimate] = {}
    for scale in scales:
        if scale == "odds-ratio":
            _check_odds(m)
            est = math.log(p1 / (1 - p1)) - math.log(p0 / (1 - p0))
            grad = m.jac_treat / (p1 * (1 - p1)) - m.jac_control / (p0 * (1 - p0))
        elif scale == "risk-difference":
            est = p1 - p0
            grad = m.jac_treat - m.jac_control
        else:
            if p1 <= 0.0 or p0 <= 0.0:
                raise DegenerateOddsError("treated" if p1 <= 0.0 else "control", min(p1, p0))
            est = math.log(p1) - math.log(p0)
            grad = m.jac_treat / p1 - m.jac_control / p0
        se, lo, hi, pval = wald(est, grad, cov, alpha)
        out[scale] = EffectEstimate(
            estimate=est,
            se=se,
            ci_low=lo,
            ci_high=hi,
            p_value=pval,
            p_treat=p1,
            p_control=p0,
            scale=scale,
            method=method,
            converged=converged,
            note=note,
        )
    return out


def _fit_means(
    fit: FitResult,
    data: Dataset,
    rule: ResponderRule,
    qmc: QmcSettings,
    jacobian_qmc: Optional[QmcSettings],
) -> ArmMeans:
    rule.check_levels(data.k3)
    if not fit.converged:
        logger.warning("computing treatment effects from a fit that did not converge")
    return arm_means(fit.unconstrained_hat.array, data.k3, data, rule, qmc, jacobian_qmc=jacobian_qmc)


def odds_ratio_effect(
    fit: FitResult,
    data: Dataset,
    rule: ResponderRule,
    qmc: QmcSettings = DEFAULT_QMC,
    alpha: float = 0.05,
    jacobian_qmc: Optional[QmcSettings] = JACOBIAN_QMC,
) -> EffectEstimate:
    """Log odds ratio of the population-averaged responder probabilities."""
    m = _fit_means(fit, data, rule, qmc, jacobian_qmc)
    note = None if fit.converged else "fit did not converge"
    return effects_from_means(m, fit.cov_unconstrained, ("odds-ratio",), alpha, "latent", fit.converged, note)[
        "odds-ratio"
    ]


def risk_effects(
    fit: FitResult,
    data: Dataset,
    rule: ResponderRule,
    qmc: QmcSettings = DEFAULT_QMC,
    alpha: float = 0.05,
    jacobian_qmc: Optional[QmcSettings] = JACOBIAN_QMC,
) -> dict[str, EffectEstimate]:
    """Risk difference and (log) risk ratio."""
    m = _fit_means(fit, data, rule, qmc, jacobian_qmc)
    note = None if fit.converged else "fit did not converge"
    return effects_from_means(
        m, fit.cov_unconstrained, ("risk-difference", "risk-ratio"), alpha, "latent", fit.converged, note
    )


def all_effects(
    fit: FitResult,
    data: Dataset,
    rule: ResponderRule,
    qmc: QmcSettings = DEFAULT_QMC,
    alpha: float = 0.05,
    jacobian_qmc: Optional[QmcSettings] = JACOBIAN_QMC,
) -> dict[str, EffectEstimate]:
    """All three scales from a single Jacobian sweep."""
    m = _fit_means(fit, data, rule, qmc, jacobian_qmc)
    note = None if fit.converged else "fit did not converge"
    return effects_from_means(m, fit.cov_unconstrained, alpha=alpha, converged=fit.converged, note=note)


def marginal_log_or(p1: float, p0: float) -> float:
    return math.log(p1 / (1 - p1)) - math.log(p0 / (1 - p0))

