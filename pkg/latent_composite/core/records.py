# latent_composite/core/records.py
from __future__ import annotations

import math
from functools import cached_property
from typing import Literal, NamedTuple, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class PatientRecord(BaseModel):
    """
    One subject: arm, the two baselines and the four end-of-study outcomes.
    y3 is coded 1..k3 with 1 the best level; y4 = 0 is the responding level by default.
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    id: str
    treat: int = Field(ge=0, le=1)
    y10: float
    y20: float
    y1: float
    y2: float
    y3: int = Field(ge=1)
    y4: int = Field(ge=0, le=1)


class Columns(NamedTuple):
    treat: np.ndarray
    y10: np.ndarray
    y20: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    y3: np.ndarray
    y4: np.ndarray


class Dataset(BaseModel):
    model_config = ConfigDict(frozen=True)

    patients: tuple[PatientRecord, ...]
    k3: int = Field(default=5, ge=2)
    # complete-case exclusions made while building this dataset
    n_excluded: int = Field(default=0, ge=0)

    @field_validator("patients")
    @classmethod
    def _non_empty(cls, v):
        if not v:
            raise ValueError("dataset has no patients")
        return v

    @model_validator(mode="after")
    def _levels_in_range(self):
        for rec in self.patients:
            if rec.y3 > self.k3:
                raise ValueError(f"patient {rec.id}: y3={rec.y3} exceeds k3={self.k3}")
        return self

    @classmethod
    def from_arrays(
        cls,
        treat,
        y10,
        y20,
        y1,
        y2,
        y3,
        y4,
        k3: int = 5,
        ids: Optional[Sequence[str]] = None,
        n_excluded: int = 0,
    ) -> "Dataset":
        n = len(treat)
        ids = ids if ids is not None else [str(i + 1) for i in range(n)]
        patients = tuple(
            PatientRecord(
                id=ids[i],
                treat=int(treat[i]),
                y10=float(y10[i]),
                y20=float(y20[i]),
                y1=float(y1[i]),
                y2=float(y2[i]),
                y3=int(y3[i]),
                y4=int(y4[i]),
            )
            for i in range(n)
        )
        return cls(patients=patients, k3=k3, n_excluded=n_excluded)

    @cached_property
    def columns(self) -> Columns:
        def col(name, dtype):
            return np.array([getattr(p, name) for p in self.patients], dtype=dtype)

        return Columns(
            treat=col("treat", np.int64),
            y10=col("y10", float),
            y20=col("y20", float),
            y1=col("y1", float),
            y2=col("y2", float),
            y3=col("y3", np.int64),
            y4=col("y4", np.int64),
        )

    @property
    def n(self) -> int:
        return len(self.patients)

    def arm_counts(self) -> tuple[int, int]:
        treated = int(self.columns.treat.sum())
        return self.n - treated, treated

    def subset(self, index) -> "Dataset":
        # records are already validated, so skip re-validation
        picked = tuple(self.patients[int(i)] for i in index)
        if not picked:
            raise ValueError("subset selects no patients")
        return Dataset.model_construct(patients=picked, k3=self.k3, n_excluded=self.n_excluded)


class ResponderRule(BaseModel):
    """
    Composite responder definition: y1 <= theta1, y2 <= theta2, y3 <= w_max and
    y4 == theta4_level. theta4_level=None means the binary component never binds.
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    theta1: float = -4.0
    theta2: float = -0.6
    w_max: int = Field(default=3, ge=1)
    theta4_level: Optional[Literal[0, 1]] = 0

    def check_levels(self, k3: int) -> None:
        if self.w_max > k3:
            raise ValueError(f"w_max={self.w_max} exceeds the ordinal level count k3={k3}")

    def theta3_latent(self, tau3: Sequence[float]) -> float:
        """Latent cut matching w_max; +inf when every level responds."""
        if self.w_max >= len(tau3) + 1:
            return math.inf
        return float(tau3[self.w_max - 1])


def observed_response(rec: PatientRecord, rule: ResponderRule) -> int:
    ok = (
        rec.y1 <= rule.theta1
        and rec.y2 <= rule.theta2
        and rec.y3 <= rule.w_max
        and (rule.theta4_level is None or rec.y4 == rule.theta4_level)
    )
    return int(ok)


def responder_mask(y1, y2, y3, y4, rule: ResponderRule) -> np.ndarray:
    """Elementwise composite response for outcome arrays."""
    ok = (np.asarray(y1) <= rule.theta1) & (np.asarray(y2) <= rule.theta2) & (np.asarray(y3) <= rule.w_max)
    if rule.theta4_level is not None:
        ok &= np.asarray(y4) == rule.theta4_level
    return ok


def observed_responses(data: Dataset, rule: ResponderRule) -> np.ndarray:
    c = data.columns
    return responder_mask(c.y1, c.y2, c.y3, c.y4, rule).astype(np.int64)


def response_rate_by_component(data: Dataset, rule: ResponderRule) -> dict[str, dict[str, float]]:
    """Observed per-arm response rates in each component and in the composite."""
    c = data.columns
    parts = {
        "y1": c.y1 <= rule.theta1,
        "y2": c.y2 <= rule.theta2,
        "y3": c.y3 <= rule.w_max,
        "y4": np.ones(data.n, dtype=bool) if rule.theta4_level is None else c.y4 == rule.theta4_level,
    }
    parts["composite"] = observed_responses(data, rule).astype(bool)

    out: dict[str, dict[str, float]] = {}
    for arm_name, arm in (("control", 0), ("treated", 1)):
        mask = c.treat == arm
        if not mask.any():
            out[arm_name] = {k: math.nan for k in parts}
            continue
        out[arm_name] = {k: float(v[mask].mean()) for k, v in parts.items()}
    return out
