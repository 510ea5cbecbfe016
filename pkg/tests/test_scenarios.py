import math

import pytest
from pydantic import ValidationError

from latent_composite.core.records import ResponderRule
from latent_composite.simulation.scenarios import (
    BASELINE_PARAMS,
    Scenario,
    UnknownScenarioError,
    get_scenario,
    load_scenario_file,
    scenario_hash,
    scenario_names,
    tuned_odds_ratio,
)


def test_catalog_names():
    names = scenario_names()
    assert len(names) == 19
    assert names[:2] == ["baseline", "null"]
    for name in ("treat1", "treat5", "theta1=-2", "theta1=-6", "drivers-y1y4", "drivers-y4", "drivers-y1y2y3", "skew4"):
        assert name in names


def test_null_scenario_has_no_treatment_effect():
    p = get_scenario("null").params
    assert (p.alpha1, p.beta1, p.gamma1, p.psi1) == (0.0, 0.0, 0.0, 0.0)
    assert p.alpha0 == BASELINE_PARAMS.alpha0


def test_skewed_scenarios():
    assert get_scenario("skew1").is_skewed
    assert not get_scenario("baseline").is_skewed
    assert get_scenario("skew4").params.psi1 == 0.0


def test_unknown_scenario_suggests_close_names():
    with pytest.raises(UnknownScenarioError) as exc:
        get_scenario("basline")
    assert "baseline" in exc.value.suggestions
    assert "did you mean" in str(exc.value)


def test_override_size():
    sc = get_scenario("treat2", n_total=120)
    assert sc.n_total == 120
    assert sc.params == get_scenario("treat2").params


def test_odd_size_rejected():
    with pytest.raises(ValidationError, match="evenly"):
        get_scenario("baseline", n_total=301)


def test_rule_must_fit_levels():
    with pytest.raises(ValidationError, match="exceeds"):
        Scenario(name="bad", params=BASELINE_PARAMS, rule=ResponderRule(w_max=7))


def test_hash_ignores_description():
    sc = get_scenario("baseline")
    relabelled = sc.model_copy(update={"description": "another label"})
    assert scenario_hash(sc) == scenario_hash(relabelled)
    assert scenario_hash(sc) != scenario_hash(get_scenario("baseline", n_total=200))
    assert len(scenario_hash(sc)) == 16


def test_load_scenario_file(tmp_path):
    sc = get_scenario("theta1=-3", n_total=100)
    path = tmp_path / "sc.json"
    path.write_text(sc.model_dump_json(), encoding="utf-8")
    assert load_scenario_file(path) == sc


def test_tuned_odds_ratio():
    assert tuned_odds_ratio("treat3") == 1.794
    assert math.isnan(tuned_odds_ratio("baseline"))
