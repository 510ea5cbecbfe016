import numpy as np
import pytest
from scipy.special import ndtr
from scipy.stats import norm

from latent_composite.core.params import to_unconstrained
from latent_composite.core.records import PatientRecord
from latent_composite.core.results import FitResult
from latent_composite.gof import QuadratureError, discrete_moments, fitted_moments, modified_pearson_residuals
from latent_composite.simulation.generate import generate_dataset
from latent_composite.simulation.scenarios import get_scenario


def _record(treat: int) -> PatientRecord:
    return PatientRecord(id="p", treat=treat, y10=0.4, y20=-0.2, y1=-4.0, y2=-1.0, y3=2, y4=0)


def _fit_at(p) -> FitResult:
    return FitResult(
        params_hat=p,
        unconstrained_hat=to_unconstrained(p),
        cov_unconstrained=np.eye(21),
        loglik=0.0,
        converged=True,
        n_iter=0,
    )


@pytest.mark.parametrize("treat", [0, 1])
def test_discrete_means(params, treat):
    mu3 = params.gamma1 * treat
    mu4 = params.psi0 + params.psi1 * treat
    mean, cov = discrete_moments(params, treat)
    assert mean[0] == pytest.approx(1.0 + sum(ndtr(mu3 - t) for t in params.tau3), abs=1e-10)
    assert mean[1] == pytest.approx(ndtr(mu4), abs=1e-10)
    assert cov[1, 1] == pytest.approx(mean[1] * (1 - mean[1]), abs=1e-12)
    assert cov[0, 1] == cov[1, 0]


@pytest.mark.parametrize("treat", [0, 1])
def test_cross_covariance_closed_forms(params, treat):
    mu3 = params.gamma1 * treat
    mu4 = params.psi0 + params.psi1 * treat
    r12, r13, r14, r23, r24, r34 = params.rho
    _, sigma = fitted_moments(params, _record(treat))

    dens3 = sum(norm.pdf(t - mu3) for t in params.tau3)
    assert sigma[0, 2] == pytest.approx(r13 * params.sigma1 * dens3, abs=1e-6)
    assert sigma[1, 2] == pytest.approx(r23 * params.sigma2 * dens3, abs=1e-6)
    assert sigma[0, 3] == pytest.approx(r14 * params.sigma1 * norm.pdf(mu4), abs=1e-6)
    assert sigma[1, 3] == pytest.approx(r24 * params.sigma2 * norm.pdf(mu4), abs=1e-6)
    assert sigma[0, 1] == pytest.approx(r12 * params.sigma1 * params.sigma2)
    np.testing.assert_allclose(sigma, sigma.T)


def test_no_cross_correlation_means_no_cross_covariance(params):
    p = params.model_copy(update={"rho": (0.5, 0.0, 0.0, 0.0, 0.0, 0.3)})
    _, sigma = fitted_moments(p, _record(1))
    np.testing.assert_allclose(sigma[:2, 2:], 0.0, atol=1e-12)


def test_fitted_mean_follows_baselines(params):
    rec = _record(1)
    mean, _ = fitted_moments(params, rec)
    assert mean[0] == pytest.approx(params.alpha0 + params.alpha1 + params.alpha2 * rec.y10)
    assert mean[1] == pytest.approx(params.beta0 + params.beta1 + params.beta2 * rec.y20)


def test_statistic_is_mahalanobis_distance(params, trial):
    res = modified_pearson_residuals(_fit_at(params), trial)
    np.testing.assert_allclose(res.statistics, np.sum(res.residuals**2, axis=1))

    rec = trial.patients[0]
    mean, sigma = fitted_moments(params, rec)
    d = np.array([rec.y1, rec.y2, rec.y3, rec.y4]) - mean
    assert res.statistics[0] == pytest.approx(d @ np.linalg.solve(sigma, d))
    assert res.threshold == pytest.approx(9.487729036781154)
    assert res.n_exceed == int(np.sum(res.statistics > res.threshold))
    assert not res.repaired


def test_statistics_follow_patient_order(params, trial):
    perm = np.random.default_rng(4).permutation(trial.n)
    a = modified_pearson_residuals(_fit_at(params), trial)
    b = modified_pearson_residuals(_fit_at(params), trial.subset(perm))
    np.testing.assert_allclose(b.statistics, a.statistics[perm])
    assert b.total == pytest.approx(a.total)


def test_mean_statistic_near_dimension_at_truth(params, trial):
    res = modified_pearson_residuals(_fit_at(params), trial)
    assert abs(res.mean_statistic - 4.0) < 1.0


def test_quadrature_budget_too_small(params, trial):
    with pytest.raises(QuadratureError) as exc:
        modified_pearson_residuals(_fit_at(params), trial, max_nodes=16)
    assert exc.value.nodes == 24


@pytest.mark.slow
def test_exceedance_rate_at_truth(params):
    data = generate_dataset(get_scenario("baseline", n_total=4000), seed=99)
    res = modified_pearson_residuals(_fit_at(params), data)
    assert abs(res.mean_statistic - 4.0) < 0.25
