from __future__ import annotations

from typing import TYPE_CHECKING, Iterable

from latent_composite.comparators.augmented_binary import (
    AugmentedBinaryMethod,
    augmented_binary_analysis,
    augmented_binary_effects,
    failure_indicator,
)
from latent_composite.comparators.base import AnalysisMethod
from latent_composite.comparators.glm import GlmFit, linear_fit, logistic_fit
from latent_composite.comparators.latent import LatentAnalysis, LatentMethod
from latent_composite.comparators.standard_binary import StandardBinaryMethod, standard_binary_analysis

if TYPE_CHECKING:
    from latent_composite.config import AnalysisConfig

METHOD_NAMES = ("latent", "augbin", "binary")


def parse_methods(text: str) -> list[str]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    unknown = [n for n in names if n not in METHOD_NAMES]
    if unknown or not names:
        raise ValueError(f"unknown method(s) {unknown or text!r}; choose from {', '.join(METHOD_NAMES)}")
    # canonical order, no duplicates
    return [n for n in METHOD_NAMES if n in names]


def build_methods(names: Iterable[str], config: "AnalysisConfig") -> dict[str, AnalysisMethod]:
    methods: dict[str, AnalysisMethod] = {}
    for name in names:
        if name == "latent":
            methods[name] = LatentMethod(config.fit_options(), config.qmc(), config.alpha, config.jacobian_qmc())
        elif name == "augbin":
            methods[name] = AugmentedBinaryMethod(
                config.augbin_retain, config.augbin_condition_on_retained, config.alpha, config.min_patients
            )
        elif name == "binary":
            methods[name] = StandardBinaryMethod(config.alpha, config.min_patients)
        else:
            raise ValueError(f"unknown method {name!r}")
    return methods


__all__ = [
    "METHOD_NAMES",
    "AnalysisMethod",
    "AugmentedBinaryMethod",
    "GlmFit",
    "LatentAnalysis",
    "LatentMethod",
    "StandardBinaryMethod",
    "augmented_binary_analysis",
    "augmented_binary_effects",
    "build_methods",
    "failure_indicator",
    "linear_fit",
    "logistic_fit",
    "parse_methods",
    "standard_binary_analysis",
]
