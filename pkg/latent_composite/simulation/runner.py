# latent_composite/simulation/runner.py
"""
Replicate execution. Replicate i draws its data from the seed sequence
(seed, spawn_key=(i,)), so results do not depend on worker count or order.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from latent_composite.comparators import METHOD_NAMES, build_methods
from latent_composite.config import AnalysisConfig
from latent_composite.core.results import EffectEstimate
from latent_composite.simulation.generate import generate_dataset
from latent_composite.simulation.scenarios import Scenario

logger = logging.getLogger(__name__)


class MethodOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    method: str
    estimate: float = math.nan
    se: float = math.nan
    ci_low: float = math.nan
    ci_high: float = math.nan
    p_value: float = math.nan
    p_treat: float = math.nan
    p_control: float = math.nan
    converged: bool = False
    error: Optional[str] = None

    @classmethod
    def from_estimate(cls, est: EffectEstimate) -> "MethodOutcome":
        return cls(
            method=est.method,
            estimate=est.estimate,
            se=est.se,
            ci_low=est.ci_low,
            ci_high=est.ci_high,
            p_value=est.p_value,
            p_treat=est.p_treat,
            p_control=est.p_control,
            converged=est.converged,
            error=est.note if not est.converged else None,
        )

    @property
    def usable(self) -> bool:
        return self.converged and math.isfinite(self.estimate) and math.isfinite(self.se)


class ReplicateResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int
    outcomes: dict[str, MethodOutcome]


def replicate_seed(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(index,))


def run_replicate(
    sc: Scenario,
    index: int,
    seed: int,
    methods: Sequence[str] = METHOD_NAMES,
    config: Optional[AnalysisConfig] = None,
) -> ReplicateResult:
    config = config or AnalysisConfig(k3=sc.k3)
    data = generate_dataset(sc, replicate_seed(seed, index))
    outcomes: dict[str, MethodOutcome] = {}
    for name, method in build_methods(methods, config).items():
        try:
            outcomes[name] = MethodOutcome.from_estimate(method.analyze(data, sc.rule))
        except Exception as e:
            logger.warning("replicate %d: %s failed: %s", index, name, e)
            outcomes[name] = MethodOutcome(method=name, error=f"{type(e).__name__}: {e}")
    return ReplicateResult(index=index, outcomes=outcomes)


def _run_chunk(args) -> list[ReplicateResult]:
    sc, indices, seed, methods, config = args
    return [run_replicate(sc, i, seed, methods, config) for i in indices]


def run_scenario(
    sc: Scenario,
    n_sim: int,
    seed: int,
    methods: Sequence[str] = METHOD_NAMES,
    config: Optional[AnalysisConfig] = None,
    threads: int = 1,
) -> list[ReplicateResult]:
    """Every replicate of a scenario, in index order."""
    if n_sim < 1:
        raise ValueError("n_sim must be at least 1")
    methods = list(methods)
    config = config or AnalysisConfig(k3=sc.k3)
    logger.info("scenario %s: %d replicates, seed %d, methods %s", sc.name, n_sim, seed, ",".join(methods))

    if threads <= 1 or n_sim == 1:
        return [run_replicate(sc, i, seed, methods, config) for i in range(n_sim)]

    chunks = [list(c) for c in np.array_split(np.arange(n_sim), min(threads * 4, n_sim)) if c.size]
    jobs = [(sc, [int(i) for i in c], seed, methods, config) for c in chunks]
    results: list[ReplicateResult] = []
    with ProcessPoolExecutor(max_workers=threads) as ex:
        for part in ex.map(_run_chunk, jobs):
            results.extend(part)
    return results


def exclusion_counts(replicates: Sequence[ReplicateResult]) -> dict[str, tuple[int, int]]:
    """(used, excluded) per method."""
    counts: dict[str, list[int]] = {}
    for rep in replicates:
        for name, out in rep.outcomes.items():
            c = counts.setdefault(name, [0, 0])
            c[0 if out.usable else 1] += 1
    return {k: (v[0], v[1]) for k, v in counts.items()}
