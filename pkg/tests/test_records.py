import math

import numpy as np
import pytest
from pydantic import ValidationError

from latent_composite.core.records import (
    Dataset,
    PatientRecord,
    ResponderRule,
    observed_response,
    observed_responses,
    response_rate_by_component,
)


def _rec(**kw):
    base = dict(id="p1", treat=1, y10=0.0, y20=0.0, y1=-5.0, y2=-1.0, y3=2, y4=0)
    base.update(kw)
    return PatientRecord(**base)


def test_record_rejects_out_of_range_fields():
    with pytest.raises(ValidationError):
        _rec(treat=2)
    with pytest.raises(ValidationError):
        _rec(y3=0)
    with pytest.raises(ValidationError):
        _rec(y4=3)
    with pytest.raises(ValidationError):
        _rec(y1=math.nan)


def test_dataset_checks_ordinal_levels_and_emptiness():
    with pytest.raises(ValidationError):
        Dataset(patients=(_rec(y3=6),), k3=5)
    with pytest.raises(ValidationError):
        Dataset(patients=())
    assert Dataset(patients=(_rec(y3=3),), k3=3).n == 1


def test_observed_response_every_component_must_respond():
    rule = ResponderRule()
    assert observed_response(_rec(), rule) == 1
    assert observed_response(_rec(y1=-3.9), rule) == 0
    assert observed_response(_rec(y2=-0.5), rule) == 0
    assert observed_response(_rec(y3=4), rule) == 0
    assert observed_response(_rec(y4=1), rule) == 0


def test_threshold_is_inclusive():
    rule = ResponderRule(theta1=-4.0, theta2=-0.6, w_max=3)
    assert observed_response(_rec(y1=-4.0, y2=-0.6, y3=3), rule) == 1


def test_binary_component_can_be_released_or_flipped():
    assert observed_response(_rec(y4=1), ResponderRule(theta4_level=None)) == 1
    assert observed_response(_rec(y4=1), ResponderRule(theta4_level=1)) == 1
    assert observed_response(_rec(y4=0), ResponderRule(theta4_level=1)) == 0


def test_observed_responses_matches_records(trial, rule):
    vec = observed_responses(trial, rule)
    assert vec.dtype == np.int64
    assert vec.tolist() == [observed_response(p, rule) for p in trial.patients]


def test_theta3_latent_and_level_check():
    tau = (-1.0, -0.1, 0.45, 1.3)
    assert ResponderRule(w_max=3).theta3_latent(tau) == 0.45
    assert ResponderRule(w_max=5).theta3_latent(tau) == math.inf
    with pytest.raises(ValueError):
        ResponderRule(w_max=6).check_levels(5)


def test_columns_and_arm_counts(trial):
    c = trial.columns
    assert c.y3.min() >= 1 and c.y3.max() <= 5
    assert trial.arm_counts() == (200, 200)


def test_subset_keeps_level_count(trial):
    sub = trial.subset([0, 0, 5])
    assert sub.n == 3 and sub.k3 == trial.k3
    assert sub.patients[0] is sub.patients[1]


def test_component_rates_are_consistent(trial, rule):
    rates = response_rate_by_component(trial, rule)
    resp = observed_responses(trial, rule)
    treat = trial.columns.treat
    assert rates["treated"]["composite"] == pytest.approx(resp[treat == 1].mean())
    for arm in ("control", "treated"):
        # the composite can never exceed any single component
        assert rates[arm]["composite"] <= min(rates[arm][k] for k in ("y1", "y2", "y3", "y4"))
