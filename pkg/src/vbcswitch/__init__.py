"""Simulation and verification toolkit for a device-independent test of
indefinite causal order with the quantum switch."""

__version__ = "0.1.0"

from .behavior import Behavior
from .causal import DeterministicStrategy, classical_bound, enumerate_strategies, membership, strategy_behavior
from .inequality import (
    CLASSICAL_BOUND,
    QUANTUM_MAX,
    LinearFunctional,
    Term,
    check_no_signaling,
    evaluate_functional,
    evaluate_vbc,
    optimize_settings,
    vbc_functional,
)
from .stats import CountTable, estimate, nosignal_stat_check, sample_counts
from .switch import AngleSettings, NoiseModel, compute_behavior

__all__ = [
    "AngleSettings",
    "Behavior",
    "CLASSICAL_BOUND",
    "CountTable",
    "DeterministicStrategy",
    "LinearFunctional",
    "NoiseModel",
    "QUANTUM_MAX",
    "Term",
    "check_no_signaling",
    "classical_bound",
    "compute_behavior",
    "enumerate_strategies",
    "estimate",
    "evaluate_functional",
    "evaluate_vbc",
    "membership",
    "nosignal_stat_check",
    "optimize_settings",
    "sample_counts",
    "strategy_behavior",
    "vbc_functional",
]
