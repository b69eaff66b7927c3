"""Recursive projection identification of ARMA systems from binary-valued observations."""

from .analysis import ConvergenceReport, analyze, condition7, eta, min_step_size
from .arma import ArmaParams, ArmaPlant, companion_matrix, g_bound, lemma1_constants, spectral_radius
from .config import ExperimentConfig, InputSpec, config_from_dict, load_config
from .errors import (
    BinQuantError,
    ConditionViolated,
    ConfigError,
    DegenerateFir,
    DomainError,
    NumericalError,
    StateError,
    UnstableSystem,
)
from .estimator import RecursiveProjectionEstimator
from .harness import MonteCarloResult, export, fit_mse_slope, run_monte_carlo, run_trial
from .noise import BinarySensor, NoiseModel, pdf_extrema, quantize
from .projection import Ball, Box, project, verify_stability_subset

__version__ = "0.1.0"

__all__ = [
    "ArmaParams", "ArmaPlant", "companion_matrix", "spectral_radius", "g_bound", "lemma1_constants",
    "NoiseModel", "BinarySensor", "quantize", "pdf_extrema",
    "Box", "Ball", "project", "verify_stability_subset",
    "RecursiveProjectionEstimator",
    "ConvergenceReport", "analyze", "condition7", "eta", "min_step_size",
    "ExperimentConfig", "InputSpec", "config_from_dict", "load_config",
    "MonteCarloResult", "run_monte_carlo", "run_trial", "fit_mse_slope", "export",
    "BinQuantError", "DomainError", "DegenerateFir", "UnstableSystem", "NumericalError",
    "StateError", "ConditionViolated", "ConfigError",
]
