"""1-D mean-field-game forward solver and boundary-data reconstruction."""

from ._mfg1d import (
    AdmissibilityError,
    ConfigError,
    DegenerateProbeError,
    NonConvergenceError,
    discrete_eigenvalue,
    positivity_demo,
    reconstruct,
    run,
    simulate,
    time_factor,
    validate_config,
)

__all__ = [
    "AdmissibilityError",
    "ConfigError",
    "DegenerateProbeError",
    "NonConvergenceError",
    "discrete_eigenvalue",
    "positivity_demo",
    "reconstruct",
    "run",
    "simulate",
    "time_factor",
    "validate_config",
]
