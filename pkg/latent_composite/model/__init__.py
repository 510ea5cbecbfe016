from latent_composite.model.fit import FitOptions, InsufficientDataError, fit, starting_values
from latent_composite.model.likelihood import (
    cell_probabilities,
    cell_probability,
    log_likelihood,
    log_likelihood_details,
)

__all__ = [
    "FitOptions",
    "InsufficientDataError",
    "cell_probabilities",
    "cell_probability",
    "fit",
    "log_likelihood",
    "log_likelihood_details",
    "starting_values",
]
