import numpy as np
import pytest

from latent_composite.core.params import LatentParams, sigma_matrix
from latent_composite.core.records import Dataset, ResponderRule
from latent_composite.model.fit import FitOptions, fit
from latent_composite.simulation.generate import generate_dataset
from latent_composite.simulation.scenarios import BASELINE_PARAMS, get_scenario

CSV_HEADER = "id,treat,y10,y20,y1,y2,y3,y4\n"


@pytest.fixture
def params() -> LatentParams:
    return BASELINE_PARAMS


@pytest.fixture
def rule() -> ResponderRule:
    return ResponderRule()


@pytest.fixture(scope="session")
def trial() -> Dataset:
    """A baseline-scenario trial of 400 patients."""
    return generate_dataset(get_scenario("baseline", n_total=400), seed=11)


@pytest.fixture(scope="session")
def small_trial() -> Dataset:
    return generate_dataset(get_scenario("baseline", n_total=60), seed=3)


@pytest.fixture(scope="session")
def trial_fit(trial):
    return fit(trial, FitOptions())


@pytest.fixture
def random_params():
    """Draw structural parameters with a positive-definite covariance."""

    def draw(rng: np.random.Generator) -> LatentParams:
        while True:
            rho = tuple(float(r) for r in rng.uniform(-0.6, 0.6, size=6))
            p = LatentParams(
                alpha0=float(rng.normal()),
                alpha1=float(rng.normal(scale=0.5)),
                alpha2=float(rng.normal(scale=0.5)),
                beta0=float(rng.normal()),
                beta1=float(rng.normal(scale=0.5)),
                beta2=float(rng.normal(scale=0.5)),
                gamma1=float(rng.normal(scale=0.5)),
                psi0=float(rng.normal(scale=0.5)),
                psi1=float(rng.normal(scale=0.5)),
                tau3=tuple(float(t) for t in np.sort(rng.uniform(-2.0, 2.0, size=4)) + np.arange(4) * 0.05),
                sigma1=float(rng.uniform(0.5, 2.0)),
                sigma2=float(rng.uniform(0.5, 2.0)),
                rho=rho,
            )
            try:
                sigma_matrix(p)
                return p
            except ValueError:
                continue

    return draw


@pytest.fixture
def write_csv(tmp_path):
    def write(body: str, name: str = "trial.csv", header: str = CSV_HEADER):
        path = tmp_path / name
        path.write_text(header + body, encoding="utf-8")
        return path

    return write


@pytest.fixture
def trial_csv(trial, tmp_path):
    """The session trial written in the patient CSV layout."""
    path = tmp_path / "trial.csv"
    rows = [
        ",".join([p.id, str(p.treat), repr(p.y10), repr(p.y20), repr(p.y1), repr(p.y2), str(p.y3), str(p.y4)])
        for p in trial.patients
    ]
    path.write_text(CSV_HEADER + "\n".join(rows) + "\n", encoding="utf-8")
    return path
