"""The probability table P(a1, a2, b, c | x1, x2, y, z)."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .config import TOL
from .errors import ValidationError

INPUTS = ("x1", "x2", "y", "z")
OUTPUTS = ("a1", "a2", "b", "c")
AXES = INPUTS + OUTPUTS
SHAPE = (2,) * 8

SETTINGS = tuple(itertools.product((0, 1), repeat=4))  # (x1, x2, y, z), x1 most significant
OUTCOMES = tuple(itertools.product((0, 1), repeat=4))  # (a1, a2, b, c), a1 most significant


def setting_index(x1: int, x2: int, y: int, z: int) -> int:
    return 8 * x1 + 4 * x2 + 2 * y + z


def outcome_index(a1: int, a2: int, b: int, c: int) -> int:
    return 8 * a1 + 4 * a2 + 2 * b + c


@dataclass(frozen=True)
class Behavior:
    """Conditional distribution over the 16 settings x 16 outcomes.

    ``table[x1, x2, y, z, a1, a2, b, c]``; ``flat`` is the row-major 256-vector
    with the setting as the slow index. The array is made read-only.
    """

    table: np.ndarray

    def __post_init__(self):
        t = np.array(self.table, dtype=float).reshape(SHAPE)
        if not np.all(np.isfinite(t)):
            raise ValidationError("behavior has non-finite entries")
        lo, hi = t.min(), t.max()
        if lo < -TOL.algebraic or hi > 1 + TOL.algebraic:
            raise ValidationError(f"behavior entries outside [0, 1]: min {lo}, max {hi}")
        sums = t.reshape(16, 16).sum(axis=1)
        dev = np.max(np.abs(sums - 1))
        if dev > TOL.normalization:
            raise ValidationError(f"behavior not normalized per setting (max deviation {dev:.3e})")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @classmethod
    def from_flat(cls, flat) -> "Behavior":
        return cls(np.asarray(flat, dtype=float).reshape(SHAPE))

    @property
    def flat(self) -> np.ndarray:
        return self.table.reshape(256)

    @property
    def by_setting(self) -> np.ndarray:
        """(16, 16) view: rows are settings, columns are outcomes."""
        return self.table.reshape(16, 16)

    def mix(self, other: "Behavior", weight: float) -> "Behavior":
        """``weight * self + (1 - weight) * other``."""
        return Behavior(weight * self.table + (1 - weight) * other.table)
