import math

import numpy as np
import pytest
from scipy.special import ndtr

from latent_composite.core.params import to_unconstrained
from latent_composite.core.records import ResponderRule
from latent_composite.inference import (
    ArmMeans,
    DegenerateOddsError,
    QmcSettings,
    all_effects,
    arm_means,
    effects_from_means,
    marginal_log_or,
    response_prob,
    wald,
)

FAST_QMC = QmcSettings(n_points=256, n_shifts=4)


def test_response_prob_factorizes_without_correlation(params, rule):
    p = params.model_copy(update={"rho": (0.0,) * 6})
    y10, y20 = 0.3, -0.7
    mu = p.means(1, y10, y20)[0]
    expected = (
        ndtr((rule.theta1 - mu[0]) / p.sigma1)
        * ndtr((rule.theta2 - mu[1]) / p.sigma2)
        * ndtr(p.tau3[rule.w_max - 1] - mu[2])
        * ndtr(-mu[3])
    )
    assert response_prob(p, 1, y10, y20, rule) == pytest.approx(expected, abs=1e-4)


def test_binary_level_one_complements_level_zero(params):
    p = params.model_copy(update={"rho": (0.0,) * 6})
    r0 = ResponderRule(theta1=10.0, theta2=10.0, w_max=5, theta4_level=0)
    r1 = r0.model_copy(update={"theta4_level": 1})
    total = response_prob(p, 0, 0.0, 0.0, r0) + response_prob(p, 0, 0.0, 0.0, r1)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_null_treatment_gives_zero_effect(params, rule, trial):
    x = to_unconstrained(params.null()).array
    m = arm_means(x, 5, trial, rule, qmc=FAST_QMC, with_jacobian=False)
    assert m.p_treat == m.p_control
    assert marginal_log_or(m.p_treat, m.p_control) == 0.0


def test_point_estimate_and_jacobian_use_separate_budgets(params, rule, small_trial):
    x = to_unconstrained(params).array
    full = QmcSettings(n_points=512, n_shifts=4)
    m = arm_means(x, 5, small_trial, rule, qmc=full, jacobian_qmc=FAST_QMC)
    point = arm_means(x, 5, small_trial, rule, qmc=full, with_jacobian=False)
    sweep = arm_means(x, 5, small_trial, rule, qmc=FAST_QMC, jacobian_qmc=None)
    assert (m.p_treat, m.p_control) == (point.p_treat, point.p_control)
    np.testing.assert_array_equal(m.jac_treat, sweep.jac_treat)
    np.testing.assert_array_equal(m.jac_control, sweep.jac_control)
    assert np.all(np.isnan(point.jac_treat))


def test_wald_interval_and_p_value():
    cov = np.diag([0.25, 4.0])
    se, lo, hi, p = wald(1.0, np.array([1.0, 0.0]), cov)
    assert se == pytest.approx(0.5)
    assert lo == pytest.approx(1.0 - 1.959963984540054 * 0.5)
    assert hi == pytest.approx(1.0 + 1.959963984540054 * 0.5)
    assert p == pytest.approx(2.0 * ndtr(-2.0))


def test_wald_with_zero_gradient():
    se, lo, hi, p = wald(0.0, np.zeros(2), np.eye(2))
    assert (se, lo, hi, p) == (0.0, 0.0, 0.0, 1.0)


def test_effects_from_means_closed_form():
    m = ArmMeans(0.4, 0.2, np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    cov = 0.01 * np.eye(2)
    out = effects_from_means(m, cov)

    odds = out["odds-ratio"]
    assert odds.estimate == pytest.approx(math.log(0.4 / 0.6) - math.log(0.2 / 0.8))
    assert odds.se == pytest.approx(math.sqrt(0.01 * (1 / 0.24**2 + 1 / 0.16**2)))

    rd = out["risk-difference"]
    assert rd.estimate == pytest.approx(0.2)
    assert rd.se == pytest.approx(math.sqrt(0.02))

    rr = out["risk-ratio"]
    assert rr.estimate == pytest.approx(math.log(2.0))
    assert rr.se == pytest.approx(math.sqrt(0.01 * (1 / 0.4**2 + 1 / 0.2**2)))
    assert all(e.p_treat == 0.4 and e.p_control == 0.2 for e in out.values())


@pytest.mark.parametrize("p1, p0", [(1.0, 0.3), (0.3, 0.0)])
def test_degenerate_odds_raise(p1, p0):
    m = ArmMeans(p1, p0, np.zeros(1), np.zeros(1))
    with pytest.raises(DegenerateOddsError):
        effects_from_means(m, np.eye(1), ("odds-ratio",))


def test_risk_difference_survives_degenerate_arm():
    m = ArmMeans(1.0, 0.5, np.zeros(1), np.zeros(1))
    out = effects_from_means(m, np.eye(1), ("risk-difference",))
    assert out["risk-difference"].estimate == pytest.approx(0.5)


def test_all_effects_on_fitted_trial(trial, trial_fit, rule):
    out = all_effects(trial_fit, trial, rule, qmc=FAST_QMC, jacobian_qmc=FAST_QMC)
    assert set(out) == {"odds-ratio", "risk-difference", "risk-ratio"}
    odds = out["odds-ratio"]
    assert 0.0 < odds.p_control < 1.0 and 0.0 < odds.p_treat < 1.0
    assert odds.estimate == pytest.approx(marginal_log_or(odds.p_treat, odds.p_control))
    assert out["risk-difference"].estimate == pytest.approx(odds.p_treat - odds.p_control)
    for eff in out.values():
        assert eff.se > 0 and eff.ci_low < eff.estimate < eff.ci_high
        assert eff.method == "latent"


@pytest.mark.parametrize("treat, expected", [(0, 0.275), (1, 0.381)])
def test_baseline_rates_at_mean_covariates(params, rule, treat, expected):
    assert response_prob(params, treat, 0.0, 0.0, rule) == pytest.approx(expected, abs=0.01)
