# latent_composite/comparators/augmented_binary.py
"""
Augmented binary comparator: keep one continuous component as a linear model
and collapse the other three into a failure indicator F modelled by logistic
regression. Responder probability = P(Y_r <= theta_r, F = 0 | covariates).
"""
from __future__ import annotations

import logging
import math
from typing import Literal, Optional

import numpy as np
from scipy.linalg import block_diag
from scipy.special import expit, ndtr, ndtri, roots_legendre

from latent_composite.comparators.base import AnalysisMethod
from latent_composite.comparators.glm import GlmFit, linear_fit, logistic_fit
from latent_composite.comparators.standard_binary import covariate_design
from latent_composite.core.records import Dataset, ResponderRule
from latent_composite.core.results import EffectEstimate
from latent_composite.inference import ArmMeans, effects_from_means
from latent_composite.model.fit import check_analyzable

logger = logging.getLogger(__name__)

Retained = Literal["y1", "y2"]

_QUAD_NODES = 96
_DIFF_STEP = 1e-6


def failure_indicator(data: Dataset, rule: ResponderRule, retain: Retained = "y1") -> np.ndarray:
    """F = 0 when every component other than the retained one responds."""
    c = data.columns
    ok = c.y3 <= rule.w_max
    if retain == "y1":
        ok &= c.y2 <= rule.theta2
    else:
        ok &= c.y1 <= rule.theta1
    if rule.theta4_level is not None:
        ok &= c.y4 == rule.theta4_level
    return (~ok).astype(np.int64)


def _retained(data: Dataset, rule: ResponderRule, retain: Retained):
    c = data.columns
    if retain == "y1":
        return c.y1, rule.theta1
    return c.y2, rule.theta2


class _Quadrature:
    """Gauss-Legendre on the normal-probability scale of the retained outcome."""

    def __init__(self, n: int = _QUAD_NODES):
        x, w = roots_legendre(n)
        self.u = (x + 1.0) / 2.0
        self.w = w / 2.0

    def integrate(self, mu, sigma, theta, fail_coef, design_rows) -> np.ndarray:
        """
        int_{-inf}^{theta} P(F=0 | x, y) N(y; mu, sigma) dy for each row, where
        the F model has y appended as its last covariate.
        """
        top = ndtr((theta - mu) / sigma)
        u = top[:, None] * self.u[None, :]
        y = mu[:, None] + sigma * ndtri(np.clip(u, 1e-300, 1.0))
        eta = (design_rows @ fail_coef[:-1])[:, None] + fail_coef[-1] * y
        return top * (expit(-eta) @ self.w)


def _arm_probabilities(
    params: np.ndarray,
    x: np.ndarray,
    theta: float,
    n_lin: int,
    fail_mode: str,
    quad: Optional[_Quadrature],
) -> np.ndarray:
    """Mean responder probability (treated, control) at a stacked parameter vector."""
    delta = params[:n_lin]
    sigma = math.exp(params[n_lin])
    fail_coef = params[n_lin + 1 :]
    out = np.empty(2)
    for j, arm in enumerate((1.0, 0.0)):
        xa = x.copy()
        xa[:, 1] = arm
        mu = xa @ delta
        if fail_mode == "none":
            p = ndtr((theta - mu) / sigma)
        elif fail_mode == "independent":
            p = expit(-(xa @ fail_coef)) * ndtr((theta - mu) / sigma)
        else:
            p = quad.integrate(mu, sigma, theta, fail_coef, xa)
        out[j] = p.mean()
    return out


def augmented_binary_effects(
    data: Dataset,
    rule: ResponderRule,
    retain: Retained = "y1",
    condition_on_retained: bool = False,
    alpha: float = 0.05,
    min_patients: int = 2,
) -> dict[str, EffectEstimate]:
    check_analyzable(data, min_patients)
    rule.check_levels(data.k3)
    x = covariate_design(data)
    y, theta = _retained(data, rule, retain)
    fail = failure_indicator(data, rule, retain)
    n = data.n

    lin = linear_fit(x, y)
    lin_cov = np.zeros((x.shape[1] + 1, x.shape[1] + 1))
    lin_cov[:-1, :-1] = lin.covariance
    lin_cov[-1, -1] = 1.0 / (2.0 * n)
    lin_params = np.concatenate([lin.coefficients, [math.log(lin.scale)]])

    notes = []
    converged = True
    quad = None
    fail_fit: Optional[GlmFit] = None
    if fail.min() == fail.max():
        logger.warning(
            "failure indicator is constant (all %d); using the continuous component alone", int(fail[0])
        )
        notes.append(f"failure indicator constant at {int(fail[0])}; continuous-only probability")
        fail_mode = "none"
        params, cov = lin_params, lin_cov
    else:
        fx = np.column_stack([x, y]) if condition_on_retained else x
        fail_fit = logistic_fit(fx, fail)
        if not fail_fit.converged:
            converged = False
            notes.append(f"failure model: {fail_fit.note}")
        fail_mode = "conditional" if condition_on_retained else "independent"
        if condition_on_retained:
            quad = _Quadrature()
        params = np.concatenate([lin_params, fail_fit.coefficients])
        cov = block_diag(lin_cov, fail_fit.covariance)

    def means(z):
        return _arm_probabilities(z, x, theta, x.shape[1], fail_mode, quad)

    m = means(params)
    jac = np.empty((2, params.size))
    z = params.copy()
    for j in range(params.size):
        h = _DIFF_STEP * max(1.0, abs(params[j]))
        z[j] = params[j] + h
        up = means(z)
        z[j] = params[j] - h
        down = means(z)
        z[j] = params[j]
        jac[:, j] = (up - down) / (2.0 * h)

    arm = ArmMeans(float(m[0]), float(m[1]), jac[0], jac[1])
    return effects_from_means(
        arm,
        cov,
        alpha=alpha,
        method="augbin",
        converged=converged,
        note="; ".join(notes) or None,
    )


def augmented_binary_analysis(
    data: Dataset,
    rule: ResponderRule,
    retain: Retained = "y1",
    condition_on_retained: bool = False,
    alpha: float = 0.05,
    min_patients: int = 2,
) -> EffectEstimate:
    """Log odds ratio from the augmented binary model."""
    return augmented_binary_effects(data, rule, retain, condition_on_retained, alpha, min_patients)["odds-ratio"]


class AugmentedBinaryMethod(AnalysisMethod):
    name = "augbin"

    def __init__(
        self,
        retain: Retained = "y1",
        condition_on_retained: bool = False,
        alpha: float = 0.05,
        min_patients: int = 2,
    ):
        self.retain = retain
        self.condition_on_retained = condition_on_retained
        self.alpha = alpha
        self.min_patients = min_patients

    def analyze(self, data: Dataset, rule: ResponderRule) -> EffectEstimate:
        return self.analyze_all(data, rule)["odds-ratio"]

    def analyze_all(self, data: Dataset, rule: ResponderRule) -> dict[str, EffectEstimate]:
        return augmented_binary_effects(
            data, rule, self.retain, self.condition_on_retained, self.alpha, self.min_patients
        )
