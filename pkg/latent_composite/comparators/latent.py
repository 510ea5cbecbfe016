# latent_composite/comparators/latent.py
from __future__ import annotations

from typing import NamedTuple

from latent_composite.comparators.base import AnalysisMethod
from latent_composite.core.records import Dataset, ResponderRule
from latent_composite.core.results import EffectEstimate, FitResult
from latent_composite.inference import DEFAULT_QMC, JACOBIAN_QMC, QmcSettings, all_effects
from latent_composite.model.fit import FitOptions, fit


class LatentAnalysis(NamedTuple):
    fit: FitResult
    effects: dict[str, EffectEstimate]


class LatentMethod(AnalysisMethod):
    name = "latent"

    def __init__(
        self,
        options: FitOptions | None = None,
        qmc: QmcSettings = DEFAULT_QMC,
        alpha: float = 0.05,
        jacobian_qmc: QmcSettings = JACOBIAN_QMC,
    ):
        self.options = options or FitOptions()
        self.qmc = qmc
        self.alpha = alpha
        self.jacobian_qmc = jacobian_qmc

    def run(self, data: Dataset, rule: ResponderRule) -> LatentAnalysis:
        rule.check_levels(data.k3)
        result = fit(data, self.options)
        return LatentAnalysis(result, all_effects(result, data, rule, self.qmc, self.alpha, self.jacobian_qmc))

    def analyze(self, data: Dataset, rule: ResponderRule) -> EffectEstimate:
        return self.run(data, rule).effects["odds-ratio"]

    def analyze_all(self, data: Dataset, rule: ResponderRule) -> dict[str, EffectEstimate]:
        return self.run(data, rule).effects
