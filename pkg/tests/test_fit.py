import numpy as np
import pytest

from latent_composite.core.params import n_params, to_unconstrained
from latent_composite.model.fit import FitOptions, InsufficientDataError, check_analyzable, fit, starting_values
from latent_composite.model.likelihood import log_likelihood
from latent_composite.simulation.generate import generate_dataset
from latent_composite.simulation.scenarios import get_scenario


def test_starting_values_are_finite(trial):
    x0 = starting_values(trial)
    assert x0.shape == (n_params(5),)
    assert np.all(np.isfinite(x0))
    # correlations start at zero
    assert np.all(x0[-6:] == 0.0)


def test_fit_converges_and_beats_the_truth(trial, trial_fit, params):
    assert trial_fit.converged
    assert trial_fit.n_patients == trial.n
    assert trial_fit.loglik >= log_likelihood(to_unconstrained(params), trial) - 1e-6


def test_fit_covariance_is_usable(trial_fit):
    cov = trial_fit.cov_unconstrained
    np.testing.assert_allclose(cov, cov.T, atol=1e-12)
    se = trial_fit.standard_errors()
    assert np.all(np.isfinite(se)) and np.all(se > 0)


def test_estimates_within_four_standard_errors(trial_fit, params):
    truth = to_unconstrained(params).array
    z = (trial_fit.unconstrained_hat.array - truth) / trial_fit.standard_errors()
    assert np.max(np.abs(z)) < 4.0


def test_refuses_too_few_patients(small_trial):
    with pytest.raises(InsufficientDataError) as exc:
        fit(small_trial, FitOptions(min_patients=100))
    assert exc.value.n_usable == 60 and exc.value.n_required == 100


def test_refuses_single_arm(trial):
    one_arm = trial.subset(np.flatnonzero(trial.columns.treat == 1))
    with pytest.raises(InsufficientDataError) as exc:
        check_analyzable(one_arm, 30)
    assert exc.value.arms == (0, 200)


@pytest.mark.slow
def test_parameter_recovery_large_trial(params):
    data = generate_dataset(get_scenario("baseline", n_total=3000), seed=2718)
    res = fit(data)
    assert res.converged
    truth = to_unconstrained(params).array
    z = (res.unconstrained_hat.array - truth) / res.standard_errors()
    assert np.max(np.abs(z)) < 3.5
