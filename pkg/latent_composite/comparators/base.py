# latent_composite/comparators/base.py
from abc import ABC, abstractmethod

from latent_composite.core.records import Dataset, ResponderRule
from latent_composite.core.results import EffectEstimate


class AnalysisMethod(ABC):
    """One way of estimating the composite-responder log odds ratio from a dataset."""

    name: str = ""

    @abstractmethod
    def analyze(self, data: Dataset, rule: ResponderRule) -> EffectEstimate:
        ...

    def analyze_all(self, data: Dataset, rule: ResponderRule) -> dict[str, EffectEstimate]:
        """Every scale the method supports; odds-ratio only unless overridden."""
        return {"odds-ratio": self.analyze(data, rule)}
