# latent_composite/simulation/summary.py
"""
Operating characteristics of each method across replicates, every measure
paired with its Monte Carlo standard error.
"""
from __future__ import annotations

import math
from itertools import combinations
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from latent_composite.comparators import METHOD_NAMES
from latent_composite.simulation.runner import ReplicateResult

# (A, B) pairs reported as Var_B / Var_A
PRECISION_PAIRS: tuple[tuple[str, str], ...] = (("latent", "binary"), ("latent", "augbin"), ("augbin", "binary"))


class Measure(BaseModel):
    model_config = ConfigDict(frozen=True)

    estimate: float
    mcse: float


class MethodPerformance(BaseModel):
    model_config = ConfigDict(frozen=True)

    method: str
    n_used: int
    n_excluded: int
    mean_estimate: float
    bias: Measure
    coverage: Measure
    bias_corrected_coverage: Measure
    power: Measure
    mse: Measure
    emp_se: Measure
    model_se: Measure


class RelativePrecision(BaseModel):
    model_config = ConfigDict(frozen=True)

    method_a: str
    method_b: str
    n: int
    median: float
    p10: float
    p90: float

    @property
    def label(self) -> str:
        return f"{self.method_a}/{self.method_b}"


class OperatingCharacteristics(BaseModel):
    model_config = ConfigDict(frozen=True)

    true_log_or: float
    n_sim: int
    alpha: float
    methods: dict[str, MethodPerformance]
    precision: list[RelativePrecision]


_NAN = Measure(estimate=math.nan, mcse=math.nan)


def _proportion(hits: np.ndarray) -> Measure:
    n = hits.size
    if n == 0:
        return _NAN
    c = float(hits.mean())
    return Measure(estimate=c, mcse=math.sqrt(c * (1.0 - c) / n))


def method_performance(
    method: str,
    estimates,
    ses,
    ci_low,
    ci_high,
    p_values,
    true_value: float,
    n_excluded: int = 0,
    alpha: float = 0.05,
) -> MethodPerformance:
    """
    Operating characteristics of one method over the usable replications.

    MSE is the mean of (estimate - truth)^2 over replications, not their sum.
    """
    est = np.asarray(estimates, dtype=float)
    se = np.asarray(ses, dtype=float)
    lo = np.asarray(ci_low, dtype=float)
    hi = np.asarray(ci_high, dtype=float)
    pv = np.asarray(p_values, dtype=float)
    n = est.size
    mean = float(est.mean()) if n else math.nan

    if n >= 2:
        dev = est - mean
        ss = float(dev @ dev)
        bias = Measure(estimate=mean - true_value, mcse=math.sqrt(ss / (n * (n - 1))))

        sq = (est - true_value) ** 2
        mse_val = float(sq.mean())
        mse = Measure(estimate=mse_val, mcse=math.sqrt(float(((sq - mse_val) ** 2).sum()) / (n * (n - 1))))

        emp = math.sqrt(ss / (n - 1))
        emp_se = Measure(estimate=emp, mcse=emp / math.sqrt(2.0 * (n - 1)))

        var_hat = se**2
        mod = math.sqrt(float(var_hat.sum()) / (n - 1))
        var_of_var = float(np.var(var_hat, ddof=1))
        model_se = Measure(
            estimate=mod, mcse=math.sqrt(var_of_var / (4.0 * n * mod * mod)) if mod > 0 else math.nan
        )
    else:
        bias = Measure(estimate=mean - true_value, mcse=math.nan) if n else _NAN
        mse = Measure(estimate=float((est[0] - true_value) ** 2), mcse=math.nan) if n else _NAN
        emp_se = model_se = _NAN

    return MethodPerformance(
        method=method,
        n_used=n,
        n_excluded=n_excluded,
        mean_estimate=mean,
        bias=bias,
        coverage=_proportion((lo <= true_value) & (true_value <= hi)),
        bias_corrected_coverage=_proportion((lo <= mean) & (mean <= hi)),
        power=_proportion(pv < alpha),
        mse=mse,
        emp_se=emp_se,
        model_se=model_se,
    )


def relative_precision(replicates: Sequence[ReplicateResult], method_a: str, method_b: str) -> RelativePrecision:
    """Replicate-wise Var_B / Var_A over replicates where both methods are usable."""
    ratios = []
    for rep in replicates:
        a, b = rep.outcomes.get(method_a), rep.outcomes.get(method_b)
        if a is None or b is None or not (a.usable and b.usable) or a.se <= 0:
            continue
        ratios.append((b.se / a.se) ** 2)
    if not ratios:
        return RelativePrecision(method_a=method_a, method_b=method_b, n=0, median=math.nan, p10=math.nan, p90=math.nan)
    r = np.asarray(ratios)
    p10, med, p90 = np.percentile(r, [10, 50, 90])
    return RelativePrecision(
        method_a=method_a, method_b=method_b, n=r.size, median=float(med), p10=float(p10), p90=float(p90)
    )


def summarize(
    replicates: Sequence[ReplicateResult],
    true_log_or: float,
    alpha: float = 0.05,
) -> OperatingCharacteristics:
    present = {name for rep in replicates for name in rep.outcomes}
    names = [m for m in METHOD_NAMES if m in present] + sorted(present - set(METHOD_NAMES))

    methods: dict[str, MethodPerformance] = {}
    for name in names:
        outs = [rep.outcomes[name] for rep in replicates if name in rep.outcomes]
        used = [o for o in outs if o.usable]
        methods[name] = method_performance(
            name,
            [o.estimate for o in used],
            [o.se for o in used],
            [o.ci_low for o in used],
            [o.ci_high for o in used],
            [o.p_value for o in used],
            true_log_or,
            n_excluded=len(outs) - len(used),
            alpha=alpha,
        )

    pairs = [p for p in PRECISION_PAIRS if p[0] in present and p[1] in present]
    pairs += [p for p in combinations(names, 2) if p not in PRECISION_PAIRS and p[::-1] not in PRECISION_PAIRS]
    return OperatingCharacteristics(
        true_log_or=true_log_or,
        n_sim=len(replicates),
        alpha=alpha,
        methods=methods,
        precision=[relative_precision(replicates, a, b) for a, b in pairs],
    )
