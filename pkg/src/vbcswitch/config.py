"""Numerical tolerances and physical constants shared by every module."""

from dataclasses import dataclass

SPEED_OF_LIGHT = 299_792_458.0  # m/s
DEFAULT_GROUP_INDEX = 1.468  # telecom fibre near 1550 nm


@dataclass(frozen=True)
class Tolerances:
    algebraic: float = 1e-12  # Hermiticity, involution, Kraus completeness
    positivity: float = 1e-10  # minimum eigenvalue of a density matrix
    normalization: float = 1e-10  # per-setting sum of a behavior
    lp: float = 1e-9  # polytope membership residual
    lightlike: float = 1e-9  # relative width of the light-cone shell


TOL = Tolerances()
