# latent_composite/graph/state.py
from typing import Any, Optional, TypedDict

from latent_composite.config import AnalysisConfig
from latent_composite.core.records import Dataset, ResponderRule
from latent_composite.core.results import EffectEstimate, FitResult
from latent_composite.gof import GofResult


class AnalysisState(TypedDict, total=False):
    # inputs
    data: Dataset
    rule: ResponderRule
    config: AnalysisConfig
    methods: list[str]              # subset of latent|augbin|binary

    # outputs
    results: dict[str, dict[str, EffectEstimate]]   # method -> scale -> estimate
    errors: dict[str, str]          # method -> failure text
    latent_fit: Optional[FitResult]
    gof: Optional[GofResult]
    trace: list[dict[str, Any]]
