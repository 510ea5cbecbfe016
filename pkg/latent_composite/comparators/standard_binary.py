# latent_composite/comparators/standard_binary.py
from __future__ import annotations

import math

import numpy as np
from scipy.special import expit, ndtr, ndtri

from latent_composite.comparators.base import AnalysisMethod
from latent_composite.comparators.glm import logistic_fit
from latent_composite.core.records import Dataset, ResponderRule, observed_responses
from latent_composite.core.results import EffectEstimate
from latent_composite.model.fit import check_analyzable


def covariate_design(data: Dataset) -> np.ndarray:
    c = data.columns
    return np.column_stack([np.ones(data.n), c.treat.astype(float), c.y10, c.y20])


def standard_binary_analysis(
    data: Dataset,
    rule: ResponderRule,
    alpha: float = 0.05,
    min_patients: int = 2,
) -> EffectEstimate:
    """Logistic regression of the observed responder indicator on (T, y10, y20)."""
    check_analyzable(data, min_patients)
    rule.check_levels(data.k3)
    x = covariate_design(data)
    s = observed_responses(data, rule)
    res = logistic_fit(x, s)

    beta = res.coefficients
    est = float(beta[1])
    se = float(math.sqrt(res.covariance[1, 1])) if np.isfinite(res.covariance[1, 1]) else math.nan
    z = float(ndtri(1.0 - alpha / 2.0))
    if math.isfinite(se) and se > 0:
        p_value = float(2.0 * ndtr(-abs(est) / se))
        lo, hi = est - z * se, est + z * se
    else:
        p_value, lo, hi = math.nan, math.nan, math.nan

    x1, x0 = x.copy(), x.copy()
    x1[:, 1], x0[:, 1] = 1.0, 0.0
    return EffectEstimate(
        estimate=est,
        se=se,
        ci_low=lo,
        ci_high=hi,
        p_value=p_value,
        p_treat=float(expit(x1 @ beta).mean()),
        p_control=float(expit(x0 @ beta).mean()),
        method="binary",
        converged=res.converged,
        note=res.note,
    )


class StandardBinaryMethod(AnalysisMethod):
    name = "binary"

    def __init__(self, alpha: float = 0.05, min_patients: int = 2):
        self.alpha = alpha
        self.min_patients = min_patients

    def analyze(self, data: Dataset, rule: ResponderRule) -> EffectEstimate:
        return standard_binary_analysis(data, rule, self.alpha, self.min_patients)
