"""Deterministic causal strategies, the classical bound and polytope membership.

A strategy fixes a hidden order and deterministic response functions:

* order 0 means Alice 1 before Alice 2, order 1 the reverse;
* ``f1`` gives the first Alice's outcome from her own input (4 functions, or
  2 constants when ``first_depends_on_input`` is False);
* ``f2`` gives the second Alice's outcome from (first input, own input)
  (16 functions);
* ``g`` gives Charlie's outcome from (x1, x2, z) (256 functions);
* ``h`` gives Bob's outcome from y (4 functions).

Bob's outcome depends on nothing but y and neither Alice sees z: this is the
dependency structure that encodes definite order, relativistic causality and
free interventions. A function with index ``k`` maps input number ``i`` to bit
``i`` of ``k``; multi-bit inputs are numbered with the first listed argument
most significant. Strategies are enumerated by the global index
``order * P + ((f1 * 16 + f2) * 256 + g) * 4 + h`` where ``P`` is the number of
strategies per order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog, nnls

from .behavior import SETTINGS, Behavior
from .config import TOL
from .errors import NumericalError
from .inequality import LinearFunctional

N_F2, N_G, N_H = 16, 256, 4


def _bit(k, i):
    return (k >> i) & 1


def n_first(first_depends_on_input: bool = True) -> int:
    return 4 if first_depends_on_input else 2


def count_strategies(first_depends_on_input: bool = True) -> int:
    return 2 * n_first(first_depends_on_input) * N_F2 * N_G * N_H


@dataclass(frozen=True)
class DeterministicStrategy:
    order: int
    f1: int
    f2: int
    g: int
    h: int
    first_depends_on_input: bool = True

    def __post_init__(self):
        if self.order not in (0, 1):
            raise ValueError(f"order must be 0 or 1, got {self.order}")
        if not (0 <= self.f1 < n_first(self.first_depends_on_input) and 0 <= self.f2 < N_F2
                and 0 <= self.g < N_G and 0 <= self.h < N_H):
            raise ValueError(f"response index out of range: {self}")

    @property
    def index(self) -> int:
        per_order = count_strategies(self.first_depends_on_input) // 2
        return self.order * per_order + ((self.f1 * N_F2 + self.f2) * N_G + self.g) * N_H + self.h

    @classmethod
    def from_index(cls, index: int, first_depends_on_input: bool = True) -> "DeterministicStrategy":
        per_order = count_strategies(first_depends_on_input) // 2
        if not 0 <= index < 2 * per_order:
            raise IndexError(index)
        order, rest = divmod(index, per_order)
        rest, h = divmod(rest, N_H)
        rest, g = divmod(rest, N_G)
        f1, f2 = divmod(rest, N_F2)
        return cls(int(order), int(f1), int(f2), int(g), int(h), first_depends_on_input)

    def first_outcome(self, x_first: int) -> int:
        if self.first_depends_on_input:
            return _bit(self.f1, x_first)
        return self.f1

    def outputs(self, x1: int, x2: int, y: int, z: int) -> tuple[int, int, int, int]:
        """(a1, a2, b, c) for one setting."""
        if self.order == 0:
            a1 = self.first_outcome(x1)
            a2 = _bit(self.f2, 2 * x1 + x2)
        else:
            a2 = self.first_outcome(x2)
            a1 = _bit(self.f2, 2 * x2 + x1)
        c = _bit(self.g, 4 * x1 + 2 * x2 + z)
        b = _bit(self.h, y)
        return a1, a2, b, c

    def describe(self) -> dict:
        return {
            "index": self.index,
            "order": "A1<A2" if self.order == 0 else "A2<A1",
            "f1": self.f1,
            "f2": self.f2,
            "g": self.g,
            "h": self.h,
        }


def enumerate_strategies(first_depends_on_input: bool = True, start: int = 0, stop: int | None = None) -> Iterator[DeterministicStrategy]:
    """Yield strategies with global indices in ``[start, stop)`` in index order."""
    total = count_strategies(first_depends_on_input)
    stop = total if stop is None else min(stop, total)
    for i in range(start, stop):
        yield DeterministicStrategy.from_index(i, first_depends_on_input)


def strategy_behavior(s: DeterministicStrategy) -> Behavior:
    t = np.zeros((16, 16))
    for i, setting in enumerate(SETTINGS):
        a1, a2, b, c = s.outputs(*setting)
        t[i, 8 * a1 + 4 * a2 + 2 * b + c] = 1.0
    return Behavior.from_flat(t)


def vertex_outcomes(first_depends_on_input: bool = True, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Outcome index (0..15) of every strategy in ``[start, stop)`` for each setting.

    Vectorized counterpart of :meth:`DeterministicStrategy.outputs`;
    shape ``(stop - start, 16)``.
    """
    total = count_strategies(first_depends_on_input)
    stop = total if stop is None else min(stop, total)
    idx = np.arange(start, stop, dtype=np.int64)
    per_order = total // 2
    order, rest = np.divmod(idx, per_order)
    rest, h = np.divmod(rest, N_H)
    rest, g = np.divmod(rest, N_G)
    f1, f2 = np.divmod(rest, N_F2)

    s = np.array(SETTINGS, dtype=np.int64)  # (16, 4)
    x1, x2, y, z = (s[:, k][None, :] for k in range(4))
    order, f1, f2, g, h = (v[:, None] for v in (order, f1, f2, g, h))
    x_first = np.where(order == 0, x1, x2)
    x_second = np.where(order == 0, x2, x1)
    a_first = _bit(f1, x_first) if first_depends_on_input else np.broadcast_to(f1, x_first.shape)
    a_second = _bit(f2, 2 * x_first + x_second)
    a1 = np.where(order == 0, a_first, a_second)
    a2 = np.where(order == 0, a_second, a_first)
    c = _bit(g, 4 * x1 + 2 * x2 + z)
    b = _bit(h, y)
    return (8 * a1 + 4 * a2 + 2 * b + c).astype(np.uint8)


_VERTEX_CACHE: dict[bool, np.ndarray] = {}


def all_vertex_outcomes(first_depends_on_input: bool = True) -> np.ndarray:
    if first_depends_on_input not in _VERTEX_CACHE:
        out = vertex_outcomes(first_depends_on_input)
        out.setflags(write=False)
        _VERTEX_CACHE[first_depends_on_input] = out
    return _VERTEX_CACHE[first_depends_on_input]


def _values(coef: np.ndarray, outs: np.ndarray) -> np.ndarray:
    c16 = np.asarray(coef, dtype=float).reshape(16, 16)
    return c16[np.arange(16), outs].sum(axis=1)


def classical_bound(
    f: LinearFunctional | np.ndarray, first_depends_on_input: bool = True, chunks: int = 1
) -> tuple[float, DeterministicStrategy]:
    """Maximum of a linear functional over all deterministic strategies.

    The enumeration is split into ``chunks`` contiguous index ranges whose
    partial maxima are merged; ties go to the lowest global index, so the
    answer does not depend on ``chunks``.
    """
    coef = f.coefficients() if isinstance(f, LinearFunctional) else np.asarray(f, dtype=float)
    total = count_strategies(first_depends_on_input)
    bounds = np.linspace(0, total, chunks + 1).astype(int)
    partial = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if hi <= lo:
            continue
        vals = _values(coef, vertex_outcomes(first_depends_on_input, lo, hi))
        k = int(np.argmax(vals))
        partial.append((float(vals[k]), lo + k))
    best_val = max(v for v, _ in partial)
    best_idx = min(i for v, i in partial if v == best_val)
    return best_val, DeterministicStrategy.from_index(best_idx, first_depends_on_input)


# ------------------------------------------------------------------ membership


@dataclass(frozen=True)
class MembershipResult:
    """Outcome of the causal-polytope test.

    ``weights`` maps strategy index to convex weight when feasible.
    ``max_violation`` is the optimal worst-cell mismatch of the best mixture
    (0 for members). When infeasible, ``separating`` holds a 256-coefficient
    functional whose value on the behavior exceeds its classical bound by
    ``separation``.
    """

    feasible: bool
    max_violation: float
    weights: dict[int, float] | None = None
    residual: float | None = None
    separating: np.ndarray | None = None
    separation: float | None = None
    method: str = ""

    def to_dict(self) -> dict:
        d = {"feasible": self.feasible, "max_violation": self.max_violation, "method": self.method}
        if self.weights is not None:
            d["certificate"] = {str(k): v for k, v in sorted(self.weights.items())}
            d["residual"] = self.residual
        if self.separation is not None:
            d["separation"] = self.separation
        return d


def vertex_matrix(first_depends_on_input: bool = True) -> sp.csc_matrix:
    """Sparse 256 x N matrix whose columns are the vertex behaviors."""
    outs = all_vertex_outcomes(first_depends_on_input).astype(np.int64)
    n = outs.shape[0]
    rows = (np.arange(16)[None, :] * 16 + outs).ravel()
    cols = np.repeat(np.arange(n), 16)
    return sp.csc_matrix((np.ones(rows.size), (rows, cols)), shape=(256, n))


_VERTEX_LOOKUP: dict[bool, dict[bytes, int]] = {}


def _vertex_lookup(first_depends_on_input: bool) -> dict[bytes, int]:
    """Outcome pattern -> lowest strategy index producing it."""
    if first_depends_on_input not in _VERTEX_LOOKUP:
        outs = all_vertex_outcomes(first_depends_on_input)
        table: dict[bytes, int] = {}
        for i, row in enumerate(outs):
            table.setdefault(row.tobytes(), i)
        _VERTEX_LOOKUP[first_depends_on_input] = table
    return _VERTEX_LOOKUP[first_depends_on_input]


def _match_vertex(flat: np.ndarray, first_depends_on_input: bool) -> int | None:
    """Index of the vertex equal to a 0/1 behavior, or None."""
    t = flat.reshape(16, 16)
    if not np.all((np.abs(t) <= TOL.lp) | (np.abs(t - 1) <= TOL.lp)):
        return None
    outs = np.argmax(t, axis=1).astype(np.uint8)
    return _vertex_lookup(first_depends_on_input).get(outs.tobytes())


def membership(behavior: Behavior, first_depends_on_input: bool = True, use_lp: bool = False) -> MembershipResult:
    """Decide whether ``behavior`` is a convex mixture of deterministic strategies.

    A 0/1 behavior lies in a 0/1 polytope only if it is one of the vertices, so
    such inputs are answered by lookup unless ``use_lp`` is set. Otherwise the
    LP ``min t  s.t. |M w - P| <= t, sum w = 1, w >= 0`` is solved with HiGHS.
    A feasible answer is accepted only after the certificate, polished by NNLS
    on its support, reproduces the behavior within ``TOL.lp``; an infeasible
    answer only after the LP dual yields a functional separating the behavior
    from every vertex by more than ``TOL.lp``. Anything else raises
    NumericalError.
    """
    flat = behavior.flat
    if not use_lp:
        v = _match_vertex(flat, first_depends_on_input)
        if v is not None:
            return MembershipResult(True, 0.0, {v: 1.0}, 0.0, method="vertex-lookup")
        if np.all((np.abs(flat) <= TOL.lp) | (np.abs(flat - 1) <= TOL.lp)):
            sep = flat.reshape(16, 16) * 1.0
            best, _ = classical_bound(sep.reshape(256), first_depends_on_input)
            return MembershipResult(False, float("nan"), separating=sep.reshape(256),
                                    separation=16.0 - best, method="vertex-lookup")

    m = vertex_matrix(first_depends_on_input)
    n = m.shape[1]
    ones = sp.csc_matrix(np.ones((256, 1)))
    a_ub = sp.vstack([sp.hstack([m, -ones]), sp.hstack([-m, -ones])]).tocsc()
    b_ub = np.concatenate([flat, -flat])
    a_eq = sp.csc_matrix(np.concatenate([np.ones(n), [0.0]])[None, :])
    cost = np.zeros(n + 1)
    cost[-1] = 1.0
    res = linprog(
        cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], bounds=(0, None), method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise NumericalError(f"membership LP failed: status {res.status}: {res.message}")
    t_opt = float(res.x[-1])

    if t_opt <= TOL.lp:
        w = res.x[:n]
        support = np.flatnonzero(w > 1e-12)
        cols = m[:, support].toarray()
        # polish: NNLS with the normalization row weighted in
        w_s, _ = nnls(np.vstack([cols, 1e3 * np.ones(len(support))]), np.concatenate([flat, [1e3]]))
        residual = float(np.max(np.abs(cols @ w_s - flat)))
        if residual <= TOL.lp and abs(w_s.sum() - 1) <= TOL.lp:
            weights = {int(support[i]): float(w_s[i]) for i in np.flatnonzero(w_s > 0)}
            return MembershipResult(True, t_opt, weights, residual, method="lp")
        raise NumericalError(
            f"membership LP reports feasibility (t={t_opt:.3e}) but certificate residual is {residual:.3e}"
        )

    # dual of the two inequality blocks gives a separating functional
    lam = res.ineqlin.marginals
    sep = lam[256:] - lam[:256]
    best, _ = classical_bound(sep, first_depends_on_input)
    gap = float(sep @ flat - best)
    if gap < 0:
        sep, gap = -sep, float(-sep @ flat - classical_bound(-sep, first_depends_on_input)[0])
    if gap > TOL.lp:
        return MembershipResult(False, t_opt, separating=sep, separation=gap, method="lp")
    raise NumericalError(
        f"membership LP reports infeasibility (t={t_opt:.3e}) but no separating functional found (gap {gap:.3e})"
    )
