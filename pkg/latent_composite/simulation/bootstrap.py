# latent_composite/simulation/bootstrap.py
"""
Nonparametric bootstrap over patients: bias estimate, bias-corrected point
and percentile interval for any statistic of a Dataset.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Callable, Mapping

import numpy as np
from pydantic import BaseModel, ConfigDict

from latent_composite.comparators.base import AnalysisMethod
from latent_composite.core.records import Dataset, ResponderRule

logger = logging.getLogger(__name__)

Estimator = Callable[[Dataset], float]


class BootstrapSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    original: float
    mean_boot: float
    bias: float
    bias_mcse: float
    corrected: float
    ci_low: float
    ci_high: float
    n_used: int
    n_failed: int


def percentile_ranks(n: int, alpha: float = 0.05) -> tuple[int, int]:
    """1-based order-statistic ranks bounding the percentile interval."""
    lo = max(1, math.ceil(alpha / 2.0 * n))
    hi = max(lo, math.floor((1.0 - alpha / 2.0) * n))
    return lo, hi


def resample_index(rng: np.random.Generator, treat: np.ndarray, stratify: bool = False) -> np.ndarray:
    n = treat.size
    if not stratify:
        return rng.integers(0, n, size=n)
    parts = []
    for arm in (0, 1):
        members = np.flatnonzero(treat == arm)
        if members.size:
            parts.append(rng.choice(members, size=members.size, replace=True))
    return np.concatenate(parts)


def _resample_stats(
    data: Dataset,
    estimators: Mapping[str, Estimator],
    seed: int,
    stratify: bool,
    indices,
) -> list[dict[str, float]]:
    out = []
    treat = data.columns.treat
    for b in indices:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(b),)))
        sample = data.subset(resample_index(rng, treat, stratify))
        row = {}
        for name, est in estimators.items():
            try:
                row[name] = float(est(sample))
            except Exception as e:
                logger.warning("bootstrap resample %d: %s failed: %s", b, name, e)
                row[name] = math.nan
        out.append(row)
    return out


def bootstrap_statistics(
    data: Dataset,
    estimators: Mapping[str, Estimator],
    n_boot: int,
    seed: int,
    threads: int = 1,
    stratify: bool = False,
) -> dict[str, np.ndarray]:
    """
    Each estimator applied to n_boot resamples; failed evaluations are NaN.
    Resample b uses the seed sequence (seed, spawn_key=(b,)). With threads > 1
    the estimators must be picklable.
    """
    if n_boot < 1:
        raise ValueError("n_boot must be at least 1")
    if threads <= 1:
        rows = _resample_stats(data, estimators, seed, stratify, range(n_boot))
    else:
        chunks = [c.tolist() for c in np.array_split(np.arange(n_boot), min(threads * 4, n_boot)) if c.size]
        work = partial(_resample_stats, data, dict(estimators), seed, stratify)
        rows = []
        with ProcessPoolExecutor(max_workers=threads) as ex:
            for part in ex.map(work, chunks):
                rows.extend(part)
    return {name: np.array([r[name] for r in rows]) for name in estimators}


def summarize_bootstrap(name: str, original: float, boot, alpha: float = 0.05) -> BootstrapSummary:
    """bias = mean(boot) - original and corrected = original - bias."""
    boot = np.asarray(boot, dtype=float)
    used = np.sort(boot[np.isfinite(boot)])
    n = used.size
    if n == 0 or not math.isfinite(original):
        nan = math.nan
        return BootstrapSummary(
            name=name,
            original=original,
            mean_boot=nan,
            bias=nan,
            bias_mcse=nan,
            corrected=nan,
            ci_low=nan,
            ci_high=nan,
            n_used=n,
            n_failed=boot.size - n,
        )
    mean = float(used.mean())
    bias = mean - original
    lo, hi = percentile_ranks(n, alpha)
    return BootstrapSummary(
        name=name,
        original=original,
        mean_boot=mean,
        bias=bias,
        bias_mcse=float(used.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan,
        corrected=original - bias,
        ci_low=float(used[lo - 1]),
        ci_high=float(used[hi - 1]),
        n_used=n,
        n_failed=boot.size - n,
    )


def method_estimate(method: AnalysisMethod, rule: ResponderRule, data: Dataset) -> float:
    est = method.analyze(data, rule)
    if not est.converged:
        return math.nan
    return est.estimate


def bootstrap_bias_correct(
    data: Dataset,
    rule: ResponderRule,
    n_boot: int,
    seed: int,
    methods: Mapping[str, AnalysisMethod],
    threads: int = 1,
    stratify: bool = False,
    alpha: float = 0.05,
) -> dict[str, BootstrapSummary]:
    """
    Bias-corrected log odds ratio and percentile interval for each method.

    Bias is mean(bootstrap estimates) - original, so the corrected estimate is
    original - bias = 2 * original - mean(bootstrap estimates).
    """
    estimators = {name: partial(method_estimate, m, rule) for name, m in methods.items()}
    originals = {}
    for name, est in estimators.items():
        try:
            originals[name] = est(data)
        except Exception as e:
            logger.warning("bootstrap: %s failed on the full data: %s", name, e)
            originals[name] = math.nan

    boots = bootstrap_statistics(data, estimators, n_boot, seed, threads, stratify)
    out = {}
    for name in estimators:
        summary = summarize_bootstrap(name, originals[name], boots[name], alpha)
        if summary.n_failed:
            logger.warning("bootstrap: %s dropped %d of %d resamples", name, summary.n_failed, n_boot)
        out[name] = summary
    return out
