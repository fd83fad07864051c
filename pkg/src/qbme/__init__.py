"""Bayesian mean estimation of quantum states with Haar-random, design and pretty good measurements."""

__version__ = "0.1.0"

from .core import (DensityMatrix, Ensemble, Povm, PureState, Tolerances, fidelity,
                   infidelity, override_tolerances, tolerances, validate_density)
from .sampling import RngStream, build_ensemble
from .experiments import ExperimentConfig, run_batch, run_experiment

__all__ = [
    "DensityMatrix", "Ensemble", "Povm", "PureState", "Tolerances", "fidelity",
    "infidelity", "override_tolerances", "tolerances", "validate_density",
    "RngStream", "build_ensemble", "ExperimentConfig", "run_batch", "run_experiment",
]
