# latent_composite/core/results.py
from __future__ import annotations

import math
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from latent_composite.core.params import LatentParams, UnconstrainedParams

Scale = Literal["odds-ratio", "risk-ratio", "risk-difference"]


class FitResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    params_hat: LatentParams
    unconstrained_hat: UnconstrainedParams
    cov_unconstrained: np.ndarray
    loglik: float
    converged: bool
    n_iter: int = Field(ge=0)
    hessian_repaired: bool = False
    # a cell probability hit the underflow floor at the optimum
    cell_floor_hit: bool = False
    n_patients: int = Field(default=0, ge=0)
    message: str = ""

    @field_validator("cov_unconstrained")
    @classmethod
    def _symmetric(cls, v):
        v = np.asarray(v, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("covariance must be square")
        if not np.allclose(v, v.T, rtol=1e-10, atol=1e-12, equal_nan=True):
            raise ValueError("covariance must be symmetric")
        if np.any(np.diag(v) < 0):
            raise ValueError("covariance diagonal must be non-negative")
        return v

    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov_unconstrained))


class EffectEstimate(BaseModel):
    """
    Treatment effect on one scale. For odds-ratio and risk-ratio the estimate,
    SE and CI are on the log scale; risk-difference is on the natural scale.
    """

    model_config = ConfigDict(frozen=True)

    estimate: float
    se: float
    ci_low: float
    ci_high: float
    p_value: float
    p_treat: float
    p_control: float
    scale: Scale = "odds-ratio"
    method: str = "latent"
    converged: bool = True
    note: Optional[str] = None

    @model_validator(mode="after")
    def _coherent(self):
        if math.isfinite(self.se) and self.se < 0:
            raise ValueError("se must be non-negative")
        if all(math.isfinite(v) for v in (self.estimate, self.ci_low, self.ci_high)):
            if not self.ci_low <= self.estimate <= self.ci_high:
                raise ValueError("ci must bracket the estimate")
        for name in ("p_value", "p_treat", "p_control"):
            v = getattr(self, name)
            if math.isfinite(v) and not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        return self

    @property
    def log_or(self) -> float:
        if self.scale != "odds-ratio":
            raise AttributeError(f"log_or is undefined on the {self.scale} scale")
        return self.estimate

    @property
    def ci_width(self) -> float:
        return self.ci_high - self.ci_low

    @classmethod
    def failed(cls, method: str, note: str, scale: Scale = "odds-ratio") -> "EffectEstimate":
        nan = math.nan
        return cls(
            estimate=nan,
            se=nan,
            ci_low=nan,
            ci_high=nan,
            p_value=nan,
            p_treat=nan,
            p_control=nan,
            scale=scale,
            method=method,
            converged=False,
            note=note,
        )
