"""Hegselmann-Krause bounded-confidence dynamics with step-by-step energy and spectral checks."""

from .dynamics import CommGraph, Trajectory, build_graph, detect_merges, hk_step, simulate
from .energy import EnergyReport, SlackRecord, check_rmf_decrement, energy
from .generators import (
    circle_config,
    circle_config_chord,
    dumbbell_config,
    line_config,
    random_config,
)
from .spectral import (
    SpectralReport,
    check_gap_bound,
    check_spectral_decrement,
    diameter,
    lambda_t,
    spectral_report,
    symmetrized_matrix,
    transition_matrix,
)
from .state import OpinionState
from .verify import StepDiagnostics, VerificationError, rational_replay, verify_step, verify_trajectory

__version__ = "0.1.0"

__all__ = [
    "CommGraph",
    "EnergyReport",
    "OpinionState",
    "SlackRecord",
    "SpectralReport",
    "StepDiagnostics",
    "Trajectory",
    "VerificationError",
    "build_graph",
    "check_gap_bound",
    "check_rmf_decrement",
    "check_spectral_decrement",
    "circle_config",
    "circle_config_chord",
    "detect_merges",
    "diameter",
    "dumbbell_config",
    "energy",
    "hk_step",
    "lambda_t",
    "line_config",
    "random_config",
    "rational_replay",
    "simulate",
    "spectral_report",
    "symmetrized_matrix",
    "transition_matrix",
    "verify_step",
    "verify_trajectory",
]
