"""Quantum-switch model of the four-party experiment.

Register order is B (x) C (x) T: Bob's photon, the control qubit (polarization,
|0> = H) and the target qubit (time bin, |0> = early). Control |0> means
Alice 1 acts on the target before Alice 2. Outcome 0 of every binary
measurement corresponds to eigenvalue +1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from . import linalg as la
from .behavior import Behavior, SHAPE
from .errors import ValidationError

BELL = (la.ket(0, 0) + la.ket(1, 1)) / math.sqrt(2)


@dataclass(frozen=True)
class NoiseModel:
    """Imperfections of the setup.

    visibility: fraction of cross-order coherence kept on the control qubit.
    werner_p: weight of the Bell state in the B-C Werner state.
    efficiency: detection efficiency, only used when sampling counts.
    """

    visibility: float = 1.0
    werner_p: float = 1.0
    efficiency: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.visibility <= 1.0:
            raise ValidationError(f"visibility {self.visibility} outside [0, 1]")
        if not 0.0 <= self.werner_p <= 1.0:
            raise ValidationError(f"werner_p {self.werner_p} outside [0, 1]")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValidationError(f"efficiency {self.efficiency} outside (0, 1]")


IDEAL = NoiseModel()


@dataclass(frozen=True)
class AngleSettings:
    """Measurement directions in the Z-X plane, observable ``cos t Z + sin t X``."""

    bob: tuple[float, float] = (0.0, math.pi / 2)
    charlie: tuple[float, float] = (math.pi / 4, -math.pi / 4)

    def __post_init__(self):
        for a in (*self.bob, *self.charlie):
            if not -math.pi - 1e-12 <= a <= math.pi + 1e-12:
                raise ValidationError(f"angle {a} outside [-pi, pi]")

    def as_list(self) -> list[float]:
        return [*self.bob, *self.charlie]

    @classmethod
    def from_list(cls, angles: Sequence[float]) -> "AngleSettings":
        b0, b1, c0, c1 = (wrap_angle(a) for a in angles)
        return cls((b0, b1), (c0, c1))


CANONICAL_ANGLES = AngleSettings()


def wrap_angle(a: float) -> float:
    """Map onto [-pi, pi)."""
    return (a + math.pi) % (2 * math.pi) - math.pi


@dataclass(frozen=True)
class Instrument:
    """Outcome-labelled Kraus families acting on the target qubit."""

    kraus: Mapping[int, tuple[np.ndarray, ...]]
    x: int | None = None
    dim: int = field(init=False)

    def __post_init__(self):
        ops = [la.as_matrix(k) for ks in self.kraus.values() for k in ks]
        if not la.validate_kraus(ops):
            raise ValidationError(
                f"instrument is not Kraus-complete (deviation {la.kraus_deviation(ops):.3e})"
            )
        object.__setattr__(self, "dim", ops[0].shape[0])


def measure_reprepare(x: int) -> Instrument:
    """Computational-basis measurement followed by preparation of ``|x>``.

    Outcome ``a`` has the single Kraus operator ``|x><a|``.
    """
    if x not in (0, 1):
        raise ValidationError(f"input must be a bit, got {x!r}")
    return Instrument({a: (la.outer(la.ket(x), la.ket(a)),) for a in (0, 1)}, x=x)


def identity_instrument(dim: int = 2) -> Instrument:
    return Instrument({0: (np.eye(dim, dtype=complex),)})


def switch_kraus(inst1: Instrument, inst2: Instrument) -> dict[tuple[int, int], list[np.ndarray]]:
    """Kraus operators of the switch on C (x) T, grouped by outcome pair (a1, a2).

    ``W = |0><0|_C (x) K2 K1 + |1><1|_C (x) K1 K2``.
    """
    if inst1.dim != inst2.dim:
        raise ValidationError(f"instrument dimensions differ: {inst1.dim} vs {inst2.dim}")
    out: dict[tuple[int, int], list[np.ndarray]] = {}
    for (a1, ks1), (a2, ks2) in product(inst1.kraus.items(), inst2.kraus.items()):
        out[(a1, a2)] = [
            la.tensor(la.P0, k2 @ k1) + la.tensor(la.P1, k1 @ k2) for k1 in ks1 for k2 in ks2
        ]
    return out


def initial_state(noise: NoiseModel = IDEAL) -> np.ndarray:
    """Werner state on B (x) C times the early time bin on T."""
    p = noise.werner_p
    bc = p * la.outer(BELL) + (1 - p) * np.eye(4, dtype=complex) / 4
    return la.tensor(bc, la.P0)


def dephase_control(rho: np.ndarray, visibility: float, layout: la.Layout = la.BCT) -> np.ndarray:
    """Scale coherences between control |0> and |1> by ``visibility``."""
    if not 0.0 <= visibility <= 1.0:
        raise ValidationError(f"visibility {visibility} outside [0, 1]")
    zc = la.embed(la.Z, layout, "C")
    return (1 + visibility) / 2 * rho + (1 - visibility) / 2 * (zc @ rho @ zc)


def post_switch_states(x1: int, x2: int, noise: NoiseModel = IDEAL) -> dict[tuple[int, int], np.ndarray]:
    """Unnormalized B (x) C (x) T states for each Alice outcome pair, dephased."""
    rho0 = initial_state(noise)
    out = {}
    for key, ws in switch_kraus(measure_reprepare(x1), measure_reprepare(x2)).items():
        full = [la.tensor(la.I2, w) for w in ws]
        out[key] = dephase_control(la.apply_channel(full, rho0), noise.visibility)
    return out


def compute_behavior(noise: NoiseModel = IDEAL, angles: AngleSettings = CANONICAL_ANGLES) -> Behavior:
    """Exact P(a1, a2, b, c | x1, x2, y, z) of the switch experiment."""
    bob = [la.projectors_of(la.bloch_observable(t)) for t in angles.bob]
    charlie = [la.projectors_of(la.bloch_observable(t)) for t in angles.charlie]
    table = np.zeros(SHAPE)
    for x1, x2 in product((0, 1), repeat=2):
        states = post_switch_states(x1, x2, noise)
        for (a1, a2), rho in states.items():
            rho_bc = la.partial_trace(rho, la.BCT, {"B", "C"})
            for y, z, b, c in product((0, 1), repeat=4):
                eff = np.kron(bob[y][b], charlie[z][c])
                table[x1, x2, y, z, a1, a2, b, c] = np.real(np.trace(eff @ rho_bc))
    return Behavior(table)


def closed_form_terms(noise: NoiseModel) -> tuple[float, float, float]:
    """Hand-derived VBC terms at the canonical angles."""
    p, v = noise.werner_p, noise.visibility
    t12 = (3 + p) / 8
    return t12, t12, 0.5 + p * (1 + v) * math.sqrt(2) / 8
