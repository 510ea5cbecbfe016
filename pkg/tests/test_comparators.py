import math

import numpy as np
import pytest
from scipy.special import ndtr

from latent_composite.comparators import (
    AugmentedBinaryMethod,
    LatentMethod,
    StandardBinaryMethod,
    augmented_binary_effects,
    build_methods,
    failure_indicator,
    logistic_fit,
    parse_methods,
    standard_binary_analysis,
)
from latent_composite.comparators.standard_binary import covariate_design
from latent_composite.config import AnalysisConfig
from latent_composite.core.records import Dataset, ResponderRule, observed_responses
from latent_composite.model.fit import InsufficientDataError


def test_binary_matches_logistic_regression(trial, rule):
    est = standard_binary_analysis(trial, rule)
    ref = logistic_fit(covariate_design(trial), observed_responses(trial, rule))
    assert est.method == "binary"
    assert est.converged
    assert est.estimate == pytest.approx(ref.coefficients[1])
    assert est.se == pytest.approx(math.sqrt(ref.covariance[1, 1]))
    assert est.ci_low < est.estimate < est.ci_high
    assert 0.0 < est.p_control < 1.0 and 0.0 < est.p_treat < 1.0


def test_binary_refuses_single_arm(trial, rule):
    treated = trial.subset(np.flatnonzero(trial.columns.treat == 1))
    with pytest.raises(InsufficientDataError):
        StandardBinaryMethod().analyze(treated, rule)


def test_failure_indicator_excludes_the_retained_component(trial, rule):
    c = trial.columns
    others = (c.y2 <= rule.theta2) & (c.y3 <= rule.w_max) & (c.y4 == 0)
    np.testing.assert_array_equal(failure_indicator(trial, rule, "y1"), (~others).astype(int))
    others = (c.y1 <= rule.theta1) & (c.y3 <= rule.w_max) & (c.y4 == 0)
    np.testing.assert_array_equal(failure_indicator(trial, rule, "y2"), (~others).astype(int))


def test_failure_indicator_ignores_unbound_binary(trial):
    rule = ResponderRule(theta4_level=None)
    c = trial.columns
    others = (c.y2 <= rule.theta2) & (c.y3 <= rule.w_max)
    np.testing.assert_array_equal(failure_indicator(trial, rule), (~others).astype(int))


def test_augbin_constant_failure_uses_continuous_component(rule):
    rng = np.random.default_rng(21)
    n = 80
    treat = np.repeat([0, 1], n // 2)
    y10, y20 = rng.normal(size=n), rng.normal(size=n)
    y1 = -4.0 - 0.5 * treat + 0.3 * y10 + rng.normal(size=n)
    data = Dataset.from_arrays(treat, y10, y20, y1, np.full(n, -5.0), np.ones(n), np.zeros(n))

    out = augmented_binary_effects(data, rule)
    assert "constant" in out["odds-ratio"].note

    x = covariate_design(data)
    coef, rss, *_ = np.linalg.lstsq(x, y1, rcond=None)
    sigma = math.sqrt(rss[0] / n)
    x1, x0 = x.copy(), x.copy()
    x1[:, 1], x0[:, 1] = 1.0, 0.0
    assert out["odds-ratio"].p_treat == pytest.approx(ndtr((rule.theta1 - x1 @ coef) / sigma).mean())
    assert out["odds-ratio"].p_control == pytest.approx(ndtr((rule.theta1 - x0 @ coef) / sigma).mean())


@pytest.mark.parametrize("retain, conditional", [("y1", False), ("y1", True), ("y2", False)])
def test_augbin_on_trial(trial, rule, retain, conditional):
    out = AugmentedBinaryMethod(retain, conditional).analyze_all(trial, rule)
    assert set(out) == {"odds-ratio", "risk-difference", "risk-ratio"}
    odds = out["odds-ratio"]
    assert odds.method == "augbin" and odds.converged
    assert 0.0 < odds.p_control < 1.0 and 0.0 < odds.p_treat < 1.0
    assert out["risk-difference"].estimate == pytest.approx(odds.p_treat - odds.p_control)
    assert odds.se > 0


def test_augbin_rejects_unreachable_ordinal_cut(trial):
    with pytest.raises(ValueError, match="exceeds"):
        AugmentedBinaryMethod().analyze(trial, ResponderRule(w_max=6))


def test_parse_methods_canonical_order():
    assert parse_methods("binary, latent,binary") == ["latent", "binary"]


@pytest.mark.parametrize("text", ["", "latent,probit", " , "])
def test_parse_methods_rejects(text):
    with pytest.raises(ValueError, match="choose from"):
        parse_methods(text)


def test_build_methods_from_config():
    cfg = AnalysisConfig(augbin_retain="y2", alpha=0.1)
    methods = build_methods(["latent", "augbin", "binary"], cfg)
    assert isinstance(methods["latent"], LatentMethod)
    assert methods["latent"].qmc.n_points == 20_000
    assert methods["latent"].jacobian_qmc.n_points == 2048
    assert methods["augbin"].retain == "y2"
    assert methods["binary"].alpha == 0.1
