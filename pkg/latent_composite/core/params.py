# latent_composite/core/params.py
from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.special import expit, logit

from latent_composite.numerics.linalg import NotPositiveDefiniteError

# correlation order inside LatentParams.rho and the unconstrained vector
RHO_PAIRS: tuple[tuple[int, int], ...] = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
MEAN_NAMES = ("alpha0", "alpha1", "alpha2", "beta0", "beta1", "beta2", "gamma1", "psi0", "psi1")
# alpha1, beta1, gamma1, psi1
TREATMENT_INDEX = (1, 4, 6, 8)

N_MEAN = len(MEAN_NAMES)
RHO_LIMIT = 1.0 - 1e-12
_LOG_CLIP = 300.0


class InvalidParamsError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class LatentParams(BaseModel):
    """
    Structural parameters of the four-outcome latent model.

    Fixed conventions (not stored): no intercept for the ordinal latent mean,
    binary cut at 0, unit latent variances for outcomes 3 and 4.
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    alpha0: float
    alpha1: float
    alpha2: float
    beta0: float
    beta1: float
    beta2: float
    gamma1: float
    psi0: float
    psi1: float
    tau3: tuple[float, ...] = Field(min_length=1)
    sigma1: float = Field(gt=0)
    sigma2: float = Field(gt=0)
    rho: tuple[float, float, float, float, float, float]

    @field_validator("tau3")
    @classmethod
    def _increasing(cls, v):
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("cut-points must be strictly increasing")
        return v

    @field_validator("rho")
    @classmethod
    def _open_interval(cls, v):
        if any(not -1.0 < r < 1.0 for r in v):
            raise ValueError("correlations must lie in (-1, 1)")
        return v

    @property
    def k3(self) -> int:
        return len(self.tau3) + 1

    def mean_coefficients(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in MEAN_NAMES], dtype=float)

    def rho_of(self, i: int, j: int) -> float:
        """Correlation between latent outcomes i and j (0-based)."""
        if i == j:
            return 1.0
        return self.rho[RHO_PAIRS.index((min(i, j), max(i, j)))]

    def means(self, treat, y10, y20) -> np.ndarray:
        """Latent means (n, 4) for covariate arrays (or scalars)."""
        return mean_structure(self.mean_coefficients(), treat, y10, y20)

    def null(self) -> "LatentParams":
        """Copy with every treatment coefficient set to zero."""
        return self.model_copy(update={"alpha1": 0.0, "beta1": 0.0, "gamma1": 0.0, "psi1": 0.0})


class UnconstrainedParams(BaseModel):
    """
    Optimizer coordinates: the 9 mean coefficients, first cut-point followed by
    log-increments, log sigma1, log sigma2, then the six correlation parameters.
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    values: tuple[float, ...] = Field(min_length=N_MEAN + 1 + 2 + 6)

    @property
    def k3(self) -> int:
        return len(self.values) - N_MEAN - 2 - 6 + 1

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @classmethod
    def from_array(cls, x) -> "UnconstrainedParams":
        return cls(values=tuple(float(v) for v in np.asarray(x, dtype=float)))


class Structural(NamedTuple):
    """Array view of the structural parameters, used on hot paths."""

    coef: np.ndarray
    tau: np.ndarray
    sigma: np.ndarray
    rho: np.ndarray


def n_params(k3: int) -> int:
    return N_MEAN + (k3 - 1) + 2 + 6


def parameter_names(k3: int = 5) -> list[str]:
    names = list(MEAN_NAMES)
    names.append("tau1")
    names += [f"log_dtau{w}" for w in range(2, k3)]
    names += ["log_sigma1", "log_sigma2"]
    names += [f"z_rho{i + 1}{j + 1}" for i, j in RHO_PAIRS]
    return names


def mean_structure(coef: np.ndarray, treat, y10, y20) -> np.ndarray:
    a0, a1, a2, b0, b1, b2, g1, p0, p1 = coef
    t = np.asarray(treat, dtype=float)
    y10 = np.asarray(y10, dtype=float)
    y20 = np.asarray(y20, dtype=float)
    t, y10, y20 = np.broadcast_arrays(t, y10, y20)
    return np.stack(
        [a0 + a1 * t + a2 * y10, b0 + b1 * t + b2 * y20, g1 * t, p0 + p1 * t],
        axis=-1,
    )


def build_sigma(sigma: Sequence[float], rho: Sequence[float]) -> np.ndarray:
    sd = np.array([sigma[0], sigma[1], 1.0, 1.0], dtype=float)
    corr = np.eye(4)
    for (i, j), r in zip(RHO_PAIRS, rho):
        corr[i, j] = corr[j, i] = r
    return corr * np.outer(sd, sd)


def sigma_matrix(p: LatentParams) -> np.ndarray:
    s = build_sigma((p.sigma1, p.sigma2), p.rho)
    min_eig = float(np.linalg.eigvalsh(s)[0])
    if min_eig <= 0.0:
        raise NotPositiveDefiniteError(min_eig)
    return s


def unpack(x, k3: int) -> Structural:
    x = np.asarray(x, dtype=float)
    if x.shape != (n_params(k3),):
        raise InvalidParamsError("values", f"expected {n_params(k3)} entries, got {x.shape}")
    coef = x[:N_MEAN]
    pos = N_MEAN
    steps = np.clip(x[pos + 1 : pos + k3 - 1], -_LOG_CLIP, _LOG_CLIP)
    tau = np.cumsum(np.concatenate([x[pos : pos + 1], np.exp(steps)]))
    # increments below float resolution still have to leave the cuts ordered
    for w in range(1, len(tau)):
        if tau[w] <= tau[w - 1]:
            tau[w] = np.nextafter(tau[w - 1], np.inf)
    pos += k3 - 1
    sigma = np.exp(np.clip(x[pos : pos + 2], -_LOG_CLIP, _LOG_CLIP))
    pos += 2
    rho = np.clip(2.0 * expit(x[pos : pos + 6]) - 1.0, -RHO_LIMIT, RHO_LIMIT)
    return Structural(coef=coef.copy(), tau=tau, sigma=sigma, rho=rho)


def from_unconstrained(u: UnconstrainedParams) -> LatentParams:
    return structural_to_params(unpack(u.array, u.k3))


def to_unconstrained(p: LatentParams) -> UnconstrainedParams:
    tau = np.asarray(p.tau3, dtype=float)
    steps = np.diff(tau)
    if np.any(steps <= 0):
        raise InvalidParamsError("tau3", "cut-points must be strictly increasing")
    if p.sigma1 <= 0 or p.sigma2 <= 0:
        raise InvalidParamsError("sigma", "standard deviations must be positive")
    rho = np.asarray(p.rho, dtype=float)
    if np.any(np.abs(rho) >= 1):
        raise InvalidParamsError("rho", "correlations must lie in (-1, 1)")

    x = np.concatenate(
        [
            p.mean_coefficients(),
            tau[:1],
            np.log(steps),
            np.log([p.sigma1, p.sigma2]),
            logit((rho + 1.0) / 2.0),
        ]
    )
    return UnconstrainedParams.from_array(x)


def structural_to_params(s: Structural) -> LatentParams:
    return LatentParams(
        **dict(zip(MEAN_NAMES, (float(v) for v in s.coef))),
        tau3=tuple(float(t) for t in s.tau),
        sigma1=float(s.sigma[0]),
        sigma2=float(s.sigma[1]),
        rho=tuple(float(r) for r in s.rho),
    )
