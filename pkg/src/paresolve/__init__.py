"""Attenuation compensation and super-resolution for 1D photoacoustic signals."""

from .attenuation import AttenuationLaw, attenuation_coefficient, gamma, phase_velocity
from .operator import ForwardOperator, apply, apply_adjoint, build_operator, singular_values
from .resolution import ResolutionReport, cutoff_frequency, resolution_limit, separability
from .signal import NoiseModel, Signal, Spectrum, add_noise, estimate_snr, forward_dft, inverse_dft
from .solvers import DrConfig, SolverResult, TsvdConfig, dr_reconstruct, tsvd_reconstruct

__version__ = "0.1.0"

__all__ = [
    "AttenuationLaw",
    "DrConfig",
    "ForwardOperator",
    "NoiseModel",
    "ResolutionReport",
    "Signal",
    "SolverResult",
    "Spectrum",
    "TsvdConfig",
    "add_noise",
    "apply",
    "apply_adjoint",
    "attenuation_coefficient",
    "build_operator",
    "cutoff_frequency",
    "dr_reconstruct",
    "estimate_snr",
    "forward_dft",
    "gamma",
    "inverse_dft",
    "phase_velocity",
    "resolution_limit",
    "separability",
    "singular_values",
    "tsvd_reconstruct",
]
