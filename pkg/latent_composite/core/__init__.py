from latent_composite.core.params import (
    InvalidParamsError,
    LatentParams,
    UnconstrainedParams,
    from_unconstrained,
    parameter_names,
    sigma_matrix,
    to_unconstrained,
)
from latent_composite.core.records import (
    Dataset,
    PatientRecord,
    ResponderRule,
    observed_response,
    observed_responses,
)
from latent_composite.core.results import EffectEstimate, FitResult

__all__ = [
    "Dataset",
    "EffectEstimate",
    "FitResult",
    "InvalidParamsError",
    "LatentParams",
    "PatientRecord",
    "ResponderRule",
    "UnconstrainedParams",
    "from_unconstrained",
    "observed_response",
    "observed_responses",
    "parameter_names",
    "sigma_matrix",
    "to_unconstrained",
]
