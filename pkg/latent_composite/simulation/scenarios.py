# latent_composite/simulation/scenarios.py
"""
Named data-generating scenarios: the baseline trial, treatment-size cases,
responder-threshold sweeps, component-driver variants and skewed-error
variants. Scenarios can also be read from JSON.
"""
from __future__ import annotations

import difflib
import hashlib
import math
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from latent_composite.core.params import LatentParams
from latent_composite.core.records import ResponderRule


class UnknownScenarioError(ValueError):
    def __init__(self, name: str, suggestions: list[str]):
        hint = f" (did you mean: {', '.join(suggestions)}?)" if suggestions else ""
        super().__init__(f"unknown scenario {name!r}{hint}")
        self.name = name
        self.suggestions = suggestions


class BaselineSpec(BaseModel):
    """Bivariate normal distribution of the two baseline measurements."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    mean1: float = 0.0
    mean2: float = 0.0
    sd1: float = Field(default=1.0, gt=0)
    sd2: float = Field(default=1.0, gt=0)
    correlation: float = Field(default=0.0, gt=-1, lt=1)


class Scenario(BaseModel):
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    name: str
    n_total: int = Field(default=300, ge=2)
    params: LatentParams
    rule: ResponderRule = ResponderRule()
    k3: int = Field(default=5, ge=2)
    baseline: BaselineSpec = BaselineSpec()
    # shape of the skew-normal errors; all zero gives normal errors
    skew_alpha: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    description: str = ""

    @field_validator("n_total")
    @classmethod
    def _even(cls, v):
        if v % 2:
            raise ValueError("n_total must split evenly across the two arms")
        return v

    @model_validator(mode="after")
    def _consistent_levels(self):
        if self.params.k3 != self.k3:
            raise ValueError(f"params carry {self.params.k3} ordinal levels, scenario says {self.k3}")
        self.rule.check_levels(self.k3)
        return self

    @property
    def is_skewed(self) -> bool:
        return any(a != 0.0 for a in self.skew_alpha)


def scenario_hash(sc: Scenario) -> str:
    blob = sc.model_dump_json(exclude={"description"})
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


# ---------------------------
# Catalog
# ---------------------------
BASELINE_PARAMS = LatentParams(
    alpha0=-4.9,
    alpha1=-0.28,
    alpha2=-0.5,
    beta0=-1.2,
    beta1=-0.35,
    beta2=-0.5,
    gamma1=-0.24,
    psi0=-0.2,
    psi1=-0.18,
    tau3=(-1.0, -0.1, 0.45, 1.3),
    sigma1=1.0,
    sigma2=1.0,
    rho=(0.5, 0.35, 0.25, 0.4, 0.35, 0.3),
)

# (alpha1, beta1, gamma1, psi1) and the odds ratio each case was tuned to
TREAT_CASES: dict[int, tuple[tuple[float, float, float, float], float]] = {
    1: ((-0.09, -0.11, -0.145, -0.07), 1.217),
    2: ((-0.20, -0.25, -0.2, -0.12), 1.426),
    3: ((-0.30, -0.50, -0.3, -0.22), 1.794),
    4: ((-0.32, -0.65, -0.39, -0.27), 2.007),
    5: ((-0.33, -0.72, -0.45, -0.33), 2.198),
}

SKEW_SHAPES: dict[int, tuple[float, float, float, float]] = {
    1: (0.1, 0.1, 0.1, 0.1),
    2: (0.0, 0.0, 0.1, 0.1),
    3: (0.0, 0.0, 0.05, 0.05),
    4: (0.0, 0.0, 0.05, 0.05),
}

BASELINE_RULE = ResponderRule(theta1=-4.0, theta2=-0.6, w_max=3, theta4_level=0)


def _with_treatment(a1: float, b1: float, g1: float, p1: float) -> LatentParams:
    return BASELINE_PARAMS.model_copy(update={"alpha1": a1, "beta1": b1, "gamma1": g1, "psi1": p1})


def _build_catalog() -> dict[str, Scenario]:
    cat: dict[str, Scenario] = {}

    def add(sc: Scenario) -> None:
        cat[sc.name] = sc

    add(Scenario(name="baseline", params=BASELINE_PARAMS, rule=BASELINE_RULE, description="baseline trial"))
    add(
        Scenario(
            name="null",
            params=BASELINE_PARAMS.null(),
            rule=BASELINE_RULE,
            description="baseline with no treatment effect",
        )
    )

    for case, (coefs, odds_ratio) in TREAT_CASES.items():
        add(
            Scenario(
                name=f"treat{case}",
                params=_with_treatment(*coefs),
                rule=BASELINE_RULE,
                description=f"treatment case {case}, tuned odds ratio {odds_ratio}",
            )
        )

    for theta1 in (-2, -3, -4, -5, -6):
        add(
            Scenario(
                name=f"theta1={theta1}",
                params=BASELINE_PARAMS,
                rule=BASELINE_RULE.model_copy(update={"theta1": float(theta1)}),
                description=f"continuous threshold theta1 = {theta1}",
            )
        )

    k3 = BASELINE_PARAMS.k3
    add(
        Scenario(
            name="drivers-y1y4",
            params=BASELINE_PARAMS,
            rule=ResponderRule(theta1=-5.0, theta2=2.0, w_max=k3, theta4_level=0),
            description="response driven by the first continuous and the binary component",
        )
    )
    add(
        Scenario(
            name="drivers-y4",
            params=BASELINE_PARAMS,
            rule=ResponderRule(theta1=-2.0, theta2=2.0, w_max=k3, theta4_level=0),
            description="response driven mostly by the binary component",
        )
    )
    add(
        Scenario(
            name="drivers-y1y2y3",
            params=BASELINE_PARAMS,
            rule=BASELINE_RULE.model_copy(update={"theta4_level": None}),
            description="binary component does not bind",
        )
    )

    for idx, shape in SKEW_SHAPES.items():
        params = BASELINE_PARAMS.null() if idx == 4 else BASELINE_PARAMS
        add(
            Scenario(
                name=f"skew{idx}",
                params=params,
                rule=BASELINE_RULE,
                skew_alpha=shape,
                description=f"skew-normal errors, shape {shape}" + (" under the null" if idx == 4 else ""),
            )
        )
    return cat


CATALOG: dict[str, Scenario] = _build_catalog()


def scenario_names() -> list[str]:
    return list(CATALOG)


def get_scenario(name: str, n_total: Optional[int] = None) -> Scenario:
    try:
        sc = CATALOG[name]
    except KeyError:
        raise UnknownScenarioError(name, difflib.get_close_matches(name, CATALOG, n=3, cutoff=0.5)) from None
    if n_total is not None:
        sc = Scenario.model_validate({**sc.model_dump(), "n_total": n_total})
    return sc


def load_scenario_file(path: str | Path) -> Scenario:
    return Scenario.model_validate_json(Path(path).read_text(encoding="utf-8"))


def tuned_odds_ratio(name: str) -> float:
    """Odds ratio a treatment case was tuned to; NaN for scenarios without one."""
    if name.startswith("treat") and name[5:].isdigit():
        return TREAT_CASES[int(name[5:])][1]
    return math.nan
