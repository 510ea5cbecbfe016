# latent_composite/model/likelihood.py
"""
Observed-data likelihood: bivariate normal density of the two continuous
outcomes times the probability of the observed (ordinal, binary) cell given them.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from latent_composite.core.params import (
    LatentParams,
    Structural,
    UnconstrainedParams,
    build_sigma,
    mean_structure,
    unpack,
)
from latent_composite.core.records import Columns, Dataset
from latent_composite.numerics.bvn import phi2_rectangle
from latent_composite.numerics.mvn import CondNormal, conditional_34

CELL_FLOOR = 1e-300
# returned in place of the log-likelihood when Sigma is not (numerically) positive definite
LOGLIK_PENALTY = -1e12


class LikelihoodValue(NamedTuple):
    loglik: float
    cell_floor_hit: bool
    positive_definite: bool


def _extended_cuts(tau) -> np.ndarray:
    return np.concatenate([[-np.inf], np.asarray(tau, dtype=float), [np.inf]])


def _binary_bounds(k):
    k = np.asarray(k)
    lower = np.where(k == 0, -np.inf, 0.0)
    upper = np.where(k == 0, 0.0, np.inf)
    return lower, upper


def _standardized(cond: CondNormal):
    sc = cond.sigma_cond
    sd3 = math.sqrt(sc[0, 0])
    sd4 = math.sqrt(sc[1, 1])
    r = sc[0, 1] / (sd3 * sd4)
    return sd3, sd4, r


def cell_probability(p: LatentParams, w, k, cond: CondNormal):
    """
    P(Y3 = w, Y4 = k | y1, y2): four-term inclusion-exclusion on the conditional
    bivariate normal of the two discrete latents. w in 1..k3, k in {0, 1}.
    """
    cuts = _extended_cuts(p.tau3)
    w = np.asarray(w)
    if np.any(w < 1) or np.any(w > len(cuts) - 1):
        raise ValueError(f"ordinal level outside 1..{len(cuts) - 1}")
    sd3, sd4, r = _standardized(cond)
    m3 = cond.mu_cond[..., 0]
    m4 = cond.mu_cond[..., 1]
    lo4, hi4 = _binary_bounds(k)
    prob = phi2_rectangle(
        (cuts[w - 1] - m3) / sd3,
        (cuts[w] - m3) / sd3,
        (lo4 - m4) / sd4,
        (hi4 - m4) / sd4,
        r,
    )
    return float(prob) if np.ndim(prob) == 0 else prob


def cell_probabilities(p: LatentParams, cond: CondNormal) -> np.ndarray:
    """All k3 x 2 cells; shape (..., k3, 2)."""
    k3 = p.k3
    mu = np.asarray(cond.mu_cond)
    out = np.empty(mu.shape[:-1] + (k3, 2))
    for w in range(1, k3 + 1):
        for k in (0, 1):
            out[..., w - 1, k] = cell_probability(p, w, k, cond)
    return out


def _continuous_logpdf(y1, y2, mu1, mu2, s1, s2, r12):
    z1 = (y1 - mu1) / s1
    z2 = (y2 - mu2) / s2
    det = 1.0 - r12 * r12
    quad = (z1 * z1 - 2.0 * r12 * z1 * z2 + z2 * z2) / det
    return -math.log(2.0 * math.pi * s1 * s2 * math.sqrt(det)) - quad / 2.0


def loglik_terms(s: Structural, cols: Columns) -> tuple[np.ndarray, np.ndarray]:
    """Per-patient (continuous log-density, observed cell probability)."""
    mu = mean_structure(s.coef, cols.treat, cols.y10, cols.y20)
    s1, s2 = s.sigma
    r12 = s.rho[0]
    dens = _continuous_logpdf(cols.y1, cols.y2, mu[:, 0], mu[:, 1], s1, s2, r12)

    cond = conditional_34(s, cols.y1, cols.y2, mu[:, 0], mu[:, 1], mu[:, 2], mu[:, 3])
    sd3, sd4, r = _standardized(cond)
    cuts = _extended_cuts(s.tau)
    m3 = cond.mu_cond[:, 0]
    m4 = cond.mu_cond[:, 1]
    lo4, hi4 = _binary_bounds(cols.y4)
    cell = phi2_rectangle(
        (cuts[cols.y3 - 1] - m3) / sd3,
        (cuts[cols.y3] - m3) / sd3,
        (lo4 - m4) / sd4,
        (hi4 - m4) / sd4,
        r,
    )
    return dens, cell


def conditional_block_ok(s: Structural) -> bool:
    """
    True when the (Y3*, Y4* | Y1, Y2) covariance is usable: both variances
    positive and finite, correlation finite and strictly inside (-1, 1).
    A Sigma that passes Cholesky only by rounding can still fail here.
    """
    try:
        sc = conditional_34(s, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0).sigma_cond
    except ValueError:
        return False
    v33, v44, v34 = float(sc[0, 0]), float(sc[1, 1]), float(sc[0, 1])
    if not (math.isfinite(v33) and math.isfinite(v44) and v33 > 0.0 and v44 > 0.0):
        return False
    r = v34 / math.sqrt(v33 * v44)
    return math.isfinite(r) and abs(r) < 1.0


def loglik_vector(x, k3: int, cols: Columns) -> LikelihoodValue:
    s = unpack(x, k3)
    try:
        np.linalg.cholesky(build_sigma(s.sigma, s.rho))
    except np.linalg.LinAlgError:
        return LikelihoodValue(LOGLIK_PENALTY, False, False)
    if not conditional_block_ok(s):
        return LikelihoodValue(LOGLIK_PENALTY, False, False)

    try:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            dens, cell = loglik_terms(s, cols)
    except ValueError:
        return LikelihoodValue(LOGLIK_PENALTY, False, False)
    floor_hit = bool(np.any(~(cell >= CELL_FLOOR)))
    cell = np.where(cell >= CELL_FLOOR, cell, CELL_FLOOR)
    total = float(np.sum(dens) + np.sum(np.log(cell)))
    if not math.isfinite(total):
        return LikelihoodValue(LOGLIK_PENALTY, floor_hit, True)
    return LikelihoodValue(total, floor_hit, True)


def log_likelihood_details(u: UnconstrainedParams, data: Dataset) -> LikelihoodValue:
    return loglik_vector(u.array, data.k3, data.columns)


def log_likelihood(u: UnconstrainedParams, data: Dataset) -> float:
    return log_likelihood_details(u, data).loglik
