from latent_composite.simulation.bootstrap import (
    BootstrapSummary,
    bootstrap_bias_correct,
    bootstrap_statistics,
    percentile_ranks,
    summarize_bootstrap,
)
from latent_composite.simulation.generate import TrueEffect, generate_dataset, true_effect
from latent_composite.simulation.runner import MethodOutcome, ReplicateResult, run_scenario
from latent_composite.simulation.scenarios import (
    CATALOG,
    Scenario,
    UnknownScenarioError,
    get_scenario,
    scenario_hash,
)
from latent_composite.simulation.summary import OperatingCharacteristics, summarize

__all__ = [
    "CATALOG",
    "BootstrapSummary",
    "MethodOutcome",
    "OperatingCharacteristics",
    "ReplicateResult",
    "Scenario",
    "TrueEffect",
    "UnknownScenarioError",
    "bootstrap_bias_correct",
    "bootstrap_statistics",
    "generate_dataset",
    "get_scenario",
    "percentile_ranks",
    "run_scenario",
    "scenario_hash",
    "summarize",
    "summarize_bootstrap",
    "true_effect",
]
