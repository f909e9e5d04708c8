"""Differentially private weighted ERM and outcome weighted learning."""

from .core import (
    Dataset,
    LossSpec,
    ModelParams,
    clip_and_normalize,
    huber_grad,
    huber_loss,
    scale_features,
    werm_gradient,
    werm_objective,
)
from .errors import ConfigError, ConvergenceError, DataError, DomainError, DPWermError, NoMatchError, UsageError
from .mlearn import MlearnConfig, build_matches, fit_mlearn, mlearn_sensitivity, privatize_mlearn, residualize
from .owl import OwlConfig, TrialData, TrialRecord, assign, compute_weights, empirical_value, fit_dp_owl, shift_benefits
from .privacy import (
    Conservative,
    EstimatedLargeN,
    Observed,
    PrivacyBudget,
    Rng,
    SensitivitySpec,
    privatize,
    sample_sphere_noise,
    sensitivity,
)
from .simgen import ExperimentTable, SimConfig, generate, run_experiment, scenario_variants
from .solver import SolverConfig, fit_werm
from .tuner import TuneConfig, TuneResult, robustness_region, tune_gamma

__version__ = "0.1.0"
