# latent_composite/simulation/generate.py
from __future__ import annotations

import logging
import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from latent_composite.core.params import LatentParams, sigma_matrix
from latent_composite.core.records import Dataset, responder_mask
from latent_composite.numerics.linalg import cholesky
from latent_composite.simulation.scenarios import BaselineSpec, Scenario

logger = logging.getLogger(__name__)

TRUTH_DRAWS = 10_000_000
TRUTH_SEED = 20240607
_TRUTH_CHUNK = 1_000_000


class Outcomes(NamedTuple):
    y10: np.ndarray
    y20: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    y3: np.ndarray
    y4: np.ndarray


def draw_baselines(rng: np.random.Generator, n: int, spec: BaselineSpec) -> tuple[np.ndarray, np.ndarray]:
    r = spec.correlation
    z = rng.standard_normal((n, 2))
    b1 = spec.mean1 + spec.sd1 * z[:, 0]
    b2 = spec.mean2 + spec.sd2 * (r * z[:, 0] + math.sqrt(1.0 - r * r) * z[:, 1])
    return b1, b2


def skew_normal_errors(rng: np.random.Generator, n: int, corr: np.ndarray, shape) -> np.ndarray:
    """
    Standardized multivariate skew-normal draws with correlation-scale matrix
    `corr` and shape vector `shape`, by conditioning: (X0, X) are jointly normal
    with Cov(X0, X) = delta, and X is reflected wherever X0 < 0.
    """
    alpha = np.asarray(shape, dtype=float)
    omega_alpha = corr @ alpha
    delta = omega_alpha / math.sqrt(1.0 + float(alpha @ omega_alpha))
    d = corr.shape[0]
    joint = np.empty((d + 1, d + 1))
    joint[0, 0] = 1.0
    joint[0, 1:] = joint[1:, 0] = delta
    joint[1:, 1:] = corr
    z = rng.standard_normal((n, d + 1)) @ cholesky(joint).T
    x = z[:, 1:]
    return np.where(z[:, :1] >= 0.0, x, -x)


def latent_errors(rng: np.random.Generator, n: int, params: LatentParams, shape=(0.0, 0.0, 0.0, 0.0)) -> np.ndarray:
    """Error vectors (n, 4): normal with the model covariance, or skew-normal on its correlation."""
    sigma = sigma_matrix(params)
    if not any(shape):
        return rng.standard_normal((n, 4)) @ cholesky(sigma).T
    sd = np.sqrt(np.diag(sigma))
    corr = sigma / np.outer(sd, sd)
    # skewed errors are left uncentred
    return skew_normal_errors(rng, n, corr, shape) * sd


def latent_outcomes(params: LatentParams, treat, y10, y20, errors: np.ndarray) -> Outcomes:
    """Observed outcomes from latent means plus errors, ordinal and binary parts discretized."""
    latent = params.means(treat, y10, y20) + errors
    tau = np.asarray(params.tau3, dtype=float)
    # level w covers (tau[w-1], tau[w]]
    y3 = np.searchsorted(tau, latent[:, 2], side="left") + 1
    y4 = (latent[:, 3] >= 0.0).astype(np.int64)
    return Outcomes(
        np.asarray(y10, dtype=float), np.asarray(y20, dtype=float), latent[:, 0], latent[:, 1], y3, y4
    )


def generate_dataset(sc: Scenario, seed) -> Dataset:
    """One trial of sc.n_total patients, half per arm; `seed` may be an int or a SeedSequence."""
    rng = np.random.default_rng(seed)
    half = sc.n_total // 2
    treat = np.repeat([0, 1], half)
    y10, y20 = draw_baselines(rng, sc.n_total, sc.baseline)
    errors = latent_errors(rng, sc.n_total, sc.params, sc.skew_alpha)
    out = latent_outcomes(sc.params, treat, y10, y20, errors)
    return Dataset.from_arrays(treat, out.y10, out.y20, out.y1, out.y2, out.y3, out.y4, k3=sc.k3)


# ---------------------------
# True effect
# ---------------------------
class TrueEffect(BaseModel):
    model_config = ConfigDict(frozen=True)

    p_treat: float
    p_control: float
    log_or: float
    n_draws: int
    seed: int

    @property
    def odds_ratio(self) -> float:
        return math.exp(self.log_or)


@lru_cache(maxsize=64)
def true_effect(sc: Scenario, n_draws: int = TRUTH_DRAWS, seed: int = TRUTH_SEED) -> TrueEffect:
    """
    Monte Carlo responder rates per arm over the baseline distribution. Each
    draw is evaluated under both arms with the same baselines and errors.
    """
    rng = np.random.default_rng(seed)
    hits = np.zeros(2)
    done = 0
    while done < n_draws:
        m = min(_TRUTH_CHUNK, n_draws - done)
        y10, y20 = draw_baselines(rng, m, sc.baseline)
        errors = latent_errors(rng, m, sc.params, sc.skew_alpha)
        for j, arm in enumerate((1, 0)):
            out = latent_outcomes(sc.params, np.full(m, arm), y10, y20, errors)
            hits[j] += responder_mask(out.y1, out.y2, out.y3, out.y4, sc.rule).sum()
        done += m

    p1, p0 = hits / n_draws
    if not (0.0 < p0 < 1.0 and 0.0 < p1 < 1.0):
        log_or = math.nan
        logger.warning("scenario %s: degenerate true response rates (%g, %g)", sc.name, p1, p0)
    else:
        log_or = math.log(p1 / (1 - p1)) - math.log(p0 / (1 - p0))
    logger.info("scenario %s: true rates treated=%.4f control=%.4f log-OR=%.4f", sc.name, p1, p0, log_or)
    return TrueEffect(p_treat=float(p1), p_control=float(p0), log_or=log_or, n_draws=n_draws, seed=seed)
