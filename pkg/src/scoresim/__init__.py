"""Credit scorecard simulation from practitioner-specified bad ratios."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    FitError,
    InfeasibleSpecification,
    RankDeficientError,
    ScenarioError,
    SeparationError,
    UnbucketableValue,
)
from .glm import FittedModel, fit_logistic, predict_pd  # noqa: E402
from .metrics import bad_rate_table, information_value, psi, risk_bucket_psi  # noqa: E402
from .pipeline import build_design_matrix, simulate_dataset  # noqa: E402
from .rates import derive_level_bad_rates, two_level_closed_form  # noqa: E402
from .samplers import Streams, bucket_of, sample  # noqa: E402
from .scenario import ScenarioSpec, ShiftSpec, apply_shift, load_scenario, load_shift, validate  # noqa: E402

__all__ = [
    "FitError", "InfeasibleSpecification", "RankDeficientError", "ScenarioError", "SeparationError",
    "UnbucketableValue", "FittedModel", "fit_logistic", "predict_pd", "bad_rate_table",
    "information_value", "psi", "risk_bucket_psi", "build_design_matrix", "simulate_dataset",
    "derive_level_bad_rates", "two_level_closed_form", "Streams", "bucket_of", "sample",
    "ScenarioSpec", "ShiftSpec", "apply_shift", "load_scenario", "load_shift", "validate",
]
