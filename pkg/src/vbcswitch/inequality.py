"""VBC inequality, generic linear functionals, no-signaling checks and the
measurement-angle optimizer."""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from . import linalg as la
from .behavior import AXES, INPUTS, OUTPUTS, SETTINGS, OUTCOMES, Behavior
from .errors import ConfigError
from .switch import AngleSettings, CANONICAL_ANGLES, NoiseModel, compute_behavior, post_switch_states

CLASSICAL_BOUND = 7 / 4
QUANTUM_MAX = 3 / 2 + math.sqrt(2) / 4


# --------------------------------------------------------------------------- VBC


@dataclass(frozen=True)
class VbcReport:
    term1: float
    term2: float
    term3: float
    classical_bound: float = CLASSICAL_BOUND
    quantum_max: float = QUANTUM_MAX

    @property
    def terms(self) -> tuple[float, float, float]:
        return (self.term1, self.term2, self.term3)

    @property
    def total(self) -> float:
        return self.term1 + self.term2 + self.term3

    @property
    def violation(self) -> float:
        return self.total - self.classical_bound

    def to_dict(self) -> dict:
        return {
            "term1": self.term1,
            "term2": self.term2,
            "term3": self.term3,
            "total": self.total,
            "classical_bound": self.classical_bound,
            "quantum_max": self.quantum_max,
            "violates_classical_bound": bool(self.total > self.classical_bound),
        }


def evaluate_vbc(behavior: Behavior) -> VbcReport:
    """The three terms of the VBC inequality.

    Inputs a term does not condition on are averaged uniformly, z included.
    """
    t = behavior.table
    term1 = term2 = 0.0
    for x1, x2, z in product((0, 1), repeat=3):
        cell = t[x1, x2, 0, z]  # axes a1, a2, b, c
        term1 += cell[:, x1, 0, :].sum()
        term2 += cell[x2, :, 1, :].sum()
    term3 = 0.0
    for y, z in product((0, 1), repeat=2):
        cell = t[0, 0, y, z].sum(axis=(0, 1))  # axes b, c
        term3 += sum(cell[b, c] for b, c in product((0, 1), repeat=2) if b ^ c == y * z)
    return VbcReport(float(term1 / 8), float(term2 / 8), float(term3 / 4))


# ------------------------------------------------------------- linear functionals

_ALLOWED_NODES = (
    ast.Expression, ast.BoolOp, ast.And, ast.Or, ast.UnaryOp, ast.Not, ast.Compare,
    ast.Eq, ast.NotEq, ast.BinOp, ast.BitXor, ast.BitAnd, ast.BitOr, ast.Add, ast.Sub,
    ast.Mult, ast.Mod, ast.Name, ast.Load, ast.Constant,
)


def parse_event(event: str) -> ast.Expression:
    """Parse a predicate such as ``"b ^ c == y & z"``.

    Only the eight variable names, integer literals, comparisons, boolean
    connectives and + - * % ^ & | are accepted.
    """
    try:
        tree = ast.parse(event, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse event {event!r} at column {exc.offset}: {exc.msg}") from None
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            col = getattr(node, "col_offset", 0) + 1
            raise ConfigError(f"event {event!r}: {type(node).__name__} not allowed (column {col})")
        if isinstance(node, ast.Name) and node.id not in AXES:
            raise ConfigError(f"event {event!r}: unknown variable {node.id!r} (column {node.col_offset + 1})")
        if isinstance(node, ast.Constant) and not isinstance(node.value, int):
            raise ConfigError(f"event {event!r}: only integer literals allowed")
    return tree


@dataclass(frozen=True)
class Term:
    """``coefficient * P(event | given)`` with the other inputs averaged uniformly."""

    coefficient: float
    event: str
    given: Mapping[str, int] = field(default_factory=dict)
    average: tuple[str, ...] | None = None

    def __post_init__(self):
        tree = parse_event(self.event)
        for k, v in self.given.items():
            if k not in INPUTS:
                raise ConfigError(f"can only condition on inputs {INPUTS}, got {k!r}")
            if v not in (0, 1):
                raise ConfigError(f"conditioning value for {k} must be 0 or 1, got {v!r}")
        names = {n.id for n in ast.walk(tree) if isinstance(n, ast.Name)}
        if self.average is not None:
            avg = set(self.average)
            bad = avg - set(INPUTS)
            if bad:
                raise ConfigError(f"can only average over inputs, got {sorted(bad)}")
            overlap = avg & set(self.given)
            if overlap:
                raise ConfigError(f"inputs {sorted(overlap)} both conditioned and averaged")
            missing = (names & set(INPUTS)) - avg - set(self.given)
            if missing:
                raise ConfigError(f"inputs {sorted(missing)} in event neither conditioned nor averaged")
        object.__setattr__(self, "_code", compile(tree, "<event>", "eval"))

    def holds(self, **values: int) -> bool:
        return bool(eval(self._code, {"__builtins__": {}}, values))

    def coefficients(self) -> np.ndarray:
        """256-vector ``v`` with ``v @ behavior.flat`` equal to this term."""
        vec = np.zeros((16, 16))
        rows = [i for i, s in enumerate(SETTINGS) if all(s[INPUTS.index(k)] == v for k, v in self.given.items())]
        for i in rows:
            s = dict(zip(INPUTS, SETTINGS[i]))
            for j, o in enumerate(OUTCOMES):
                if self.holds(**s, **dict(zip(OUTPUTS, o))):
                    vec[i, j] = self.coefficient / len(rows)
        return vec.reshape(256)


@dataclass(frozen=True)
class LinearFunctional:
    terms: tuple[Term, ...] = ()
    name: str = ""

    def coefficients(self) -> np.ndarray:
        if not hasattr(self, "_coef"):
            coef = sum((t.coefficients() for t in self.terms), np.zeros(256))
            coef.setflags(write=False)
            object.__setattr__(self, "_coef", coef)
        return self._coef


def vbc_functional() -> LinearFunctional:
    return LinearFunctional(
        (
            Term(1.0, "a2 == x1 and b == 0", {"y": 0}),
            Term(1.0, "a1 == x2 and b == 1", {"y": 0}),
            Term(1.0, "b ^ c == y & z", {"x1": 0, "x2": 0}),
        ),
        name="vbc",
    )


def evaluate_functional(behavior: Behavior, f: LinearFunctional) -> float:
    return float(f.coefficients() @ behavior.flat)


# ---------------------------------------------------------------- no-signaling


@dataclass(frozen=True)
class NoSignalingReport:
    """Largest violation of each constraint.

    i: P(a1 a2 c | x1 x2 y z) independent of y
    ii: P(b | x1 x2 y z) independent of x1, x2, z
    iii: P(a1 a2 | x1 x2 y z) independent of z
    """

    deviations: dict[str, float]
    tol: float

    @property
    def passed(self) -> dict[str, bool]:
        return {k: v <= self.tol for k, v in self.deviations.items()}

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def to_dict(self) -> dict:
        return {"tol": self.tol, "deviations": self.deviations, "passed": self.passed, "ok": self.ok}


def no_signaling_marginals(t: np.ndarray) -> dict[str, np.ndarray]:
    """Marginal tables for each constraint with the signalling input on axis 0.

    Works for probability tables and count tables alike.
    """
    # t axes: x1 x2 y z a1 a2 b c
    m_i = t.sum(axis=6).transpose(2, 0, 1, 3, 4, 5, 6)  # y | x1 x2 z a1 a2 c
    m_ii = t.sum(axis=(4, 5, 7))  # x1 x2 y z b
    m_ii = m_ii.transpose(0, 1, 3, 2, 4).reshape(8, 2, 2)  # (x1 x2 z) | y b
    m_iii = t.sum(axis=(6, 7)).transpose(3, 0, 1, 2, 4, 5)  # z | x1 x2 y a1 a2
    return {"i": m_i, "ii": m_ii, "iii": m_iii}


def check_no_signaling(behavior: Behavior, tol: float = 1e-12) -> NoSignalingReport:
    devs = {k: float(np.max(m.max(axis=0) - m.min(axis=0))) for k, m in no_signaling_marginals(behavior.table).items()}
    return NoSignalingReport(devs, tol)


# --------------------------------------------------------------- optimization


class _AngleResponse:
    """VBC total as an explicit function of the four measurement angles.

    Built from the post-switch states, so it is exact for any noise model:
    terms 1 and 2 are affine in Bob's y=0 Bloch vector and term 3 is
    1/2 + (1/8) sum_yz (-1)^(yz) E(bob_y, charlie_z) with E bilinear.
    """

    def __init__(self, noise: NoiseModel):
        sig1 = np.zeros((4, 4), complex)
        sig2 = np.zeros((4, 4), complex)
        sig3 = np.zeros((4, 4), complex)
        for x1, x2 in product((0, 1), repeat=2):
            for (a1, a2), rho in post_switch_states(x1, x2, noise).items():
                bc = la.partial_trace(rho, la.BCT, {"B", "C"})
                if a2 == x1:
                    sig1 += bc / 4
                if a1 == x2:
                    sig2 += bc / 4
                if x1 == x2 == 0:
                    sig3 += bc
        paulis = (la.Z, la.X)

        def ev(op, s):
            return float(np.real(np.trace(op @ s)))

        # P(b = k) for Bob at angle t is (tr + (-1)^k (cos t <Z> + sin t <X>)) / 2
        self.t12_const = (ev(np.eye(4), sig1) + ev(np.eye(4), sig2)) / 2
        self.t12_vec = np.array([(ev(np.kron(p, la.I2), sig1) - ev(np.kron(p, la.I2), sig2)) / 2 for p in paulis])
        self.corr = np.array([[ev(np.kron(p, q), sig3) for q in paulis] for p in paulis])

    @staticmethod
    def _dirs(angles) -> np.ndarray:
        a = np.asarray(angles, dtype=float)
        return np.stack([np.cos(a), np.sin(a)], axis=-1)

    def t12(self, bob0) -> np.ndarray:
        return self.t12_const + self._dirs(bob0) @ self.t12_vec

    def corr_grid(self, bob, charlie) -> np.ndarray:
        return self._dirs(bob) @ self.corr @ self._dirs(charlie).T

    def total(self, angles: Sequence[float]) -> float:
        b0, b1, c0, c1 = angles
        e = self.corr_grid([b0, b1], [c0, c1])
        return float(self.t12(b0) + 0.5 + (e[0, 0] + e[0, 1] + e[1, 0] - e[1, 1]) / 8)


def optimize_settings(
    noise: NoiseModel, grid_step: float = math.pi / 36, min_step: float = 1e-7
) -> tuple[AngleSettings, float]:
    """Maximize the VBC total over Bob's and Charlie's measurement angles.

    Exhaustive grid over [-pi, pi)^4 followed by coordinate ascent with step
    halving. Ties keep the first grid point in (bob0, bob1, charlie0,
    charlie1) lexicographic order. The returned total is re-evaluated through
    the full behavior pipeline.
    """
    resp = _AngleResponse(noise)
    n = int(round(2 * math.pi / grid_step))
    grid = -math.pi + grid_step * np.arange(n)
    t12 = resp.t12(grid)
    e = resp.corr_grid(grid, grid)  # e[bob, charlie]
    best, best_idx = -np.inf, None
    for i0 in range(n):
        # vals[i1, j0, j1]
        vals = t12[i0] + 0.5 + (e[i0][None, :, None] + e[i0][None, None, :] + e[:, :, None] - e[:, None, :]) / 8
        k = int(np.argmax(vals))
        if vals.flat[k] > best:
            best = float(vals.flat[k])
            best_idx = (i0, *np.unravel_index(k, vals.shape))
    x = [float(grid[i]) for i in best_idx]

    step = grid_step
    while step >= min_step:
        improved = False
        for k in range(4):
            for sgn in (1.0, -1.0):
                trial = list(x)
                trial[k] += sgn * step
                val = resp.total(trial)
                if val > best:
                    best, x, improved = val, trial, True
                    break
        if not improved:
            step /= 2
    angles = AngleSettings.from_list(x)
    return angles, evaluate_vbc(compute_behavior(noise, angles)).total


def canonical_total(noise: NoiseModel) -> float:
    return evaluate_vbc(compute_behavior(noise, CANONICAL_ANGLES)).total
