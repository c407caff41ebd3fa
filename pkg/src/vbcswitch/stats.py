"""Finite statistics: seeded sampling of rounds, estimators and significance.

Sampling is organized in blocks of ``block_size`` consecutive rounds. Block
``i`` draws from ``numpy.random.Generator(PCG64(SeedSequence(seed,
spawn_key=(i,))))``, so a table is a pure function of (behavior, rounds,
efficiency, seed, mode, block_size) however the blocks are distributed over
workers. Within a block the per-round process (uniform settings, outcome from
the behavior, Bernoulli(efficiency) detection) is drawn in aggregated form:
multinomial setting counts, binomial thinning, multinomial outcomes. This has
the same distribution as simulating each round.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations, product
from pathlib import Path

import numpy as np
from scipy.stats import norm

from .behavior import AXES, SHAPE, Behavior
from .errors import ConfigError, InsufficientDataError
from .inequality import CLASSICAL_BOUND, LinearFunctional, no_signaling_marginals

DEFAULT_BLOCK = 1 << 20
MODES = ("iid", "fixed")

ERROR_MODEL = {
    "per_term": "binomial standard error of each setting's frequency, averaged with the term's uniform weights",
    "total": "quadrature sum of the three term errors (terms treated as independent)",
    "efficiency": "fair sampling: detection is Bernoulli thinning independent of outcome",
}


@dataclass(frozen=True)
class CountTable:
    """Detected coincidences ``counts[x1, x2, y, z, a1, a2, b, c]``."""

    counts: np.ndarray
    rounds: int
    seed: int
    efficiency: float = 1.0
    mode: str = "iid"
    block_size: int = DEFAULT_BLOCK

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.shape != SHAPE or np.any(c < 0) or not np.issubdtype(c.dtype, np.integer):
            raise ConfigError("counts must be a nonnegative integer array of shape (2,)*8")
        c = c.astype(np.int64)
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def detected(self) -> int:
        return int(self.counts.sum())

    def metadata(self) -> dict:
        return {
            "seed": self.seed,
            "rounds": self.rounds,
            "efficiency": self.efficiency,
            "mode": self.mode,
            "block_size": self.block_size,
            "detected": self.detected,
        }


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def _fixed_schedule(lo: int, hi: int) -> np.ndarray:
    """Rounds of each setting among rounds [lo, hi) when round r uses setting r % 16."""
    r = np.arange(16)
    return (hi - r + 15) // 16 - (lo - r + 15) // 16


def sample_block(probs: np.ndarray, lo: int, hi: int, efficiency: float, seed: int, block: int, mode: str) -> np.ndarray:
    rng = block_rng(seed, block)
    if mode == "iid":
        per_setting = rng.multinomial(hi - lo, np.full(16, 1 / 16))
    else:
        per_setting = _fixed_schedule(lo, hi)
    kept = rng.binomial(per_setting, efficiency) if efficiency < 1 else per_setting
    out = np.zeros((16, 16), dtype=np.int64)
    for s in range(16):
        out[s] = rng.multinomial(kept[s], probs[s])
    return out


def sample_counts(
    behavior: Behavior,
    rounds: int,
    efficiency: float = 1.0,
    seed: int = 0,
    mode: str = "iid",
    block_size: int = DEFAULT_BLOCK,
    workers: int = 1,
) -> CountTable:
    """Simulate ``rounds`` experimental rounds of ``behavior``."""
    if rounds <= 0:
        raise ConfigError(f"rounds must be positive, got {rounds}")
    if not 0 < efficiency <= 1:
        raise ConfigError(f"efficiency must be in (0, 1], got {efficiency}")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    if block_size <= 0:
        raise ConfigError("block_size must be positive")
    probs = np.clip(behavior.by_setting, 0.0, None)
    probs = probs / probs.sum(axis=1, keepdims=True)
    edges = list(range(0, rounds, block_size)) + [rounds]
    jobs = [(probs, lo, hi, efficiency, seed, i, mode) for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:]))]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda j: sample_block(*j), jobs))
    else:
        parts = [sample_block(*j) for j in jobs]
    total = np.sum(parts, axis=0)
    return CountTable(total.reshape(SHAPE), rounds, seed, efficiency, mode, block_size)


def merge_counts(tables: list[CountTable]) -> CountTable:
    """Sum tables of disjoint round ranges produced with the same seed."""
    first = tables[0]
    return CountTable(
        np.sum([t.counts for t in tables], axis=0),
        sum(t.rounds for t in tables),
        first.seed,
        first.efficiency,
        first.mode,
        first.block_size,
    )


# ----------------------------------------------------------------- estimation


@dataclass(frozen=True)
class EstimateReport:
    terms: tuple[float, float, float]
    term_stds: tuple[float, float, float]
    total: float
    total_std: float
    total_std_multinomial: float
    detected: int
    error_model: dict = field(default_factory=lambda: dict(ERROR_MODEL))

    @property
    def sigmas_above_bound(self) -> float:
        return sigmas_above_bound(self.total, self.total_std)

    def to_dict(self) -> dict:
        return {
            "terms": [{"value": v, "std": s} for v, s in zip(self.terms, self.term_stds)],
            "total": self.total,
            "total_std": self.total_std,
            "total_std_multinomial": self.total_std_multinomial,
            "sigmas_above_bound": self.sigmas_above_bound,
            "detected": self.detected,
            "error_model": self.error_model,
        }


def sigmas_above_bound(total: float, std: float, bound: float = CLASSICAL_BOUND) -> float:
    if std <= 0:
        return math.copysign(math.inf, total - bound) if total != bound else 0.0
    return (total - bound) / std


def _term(freq_groups: list[tuple[float, float]]) -> tuple[float, float]:
    """Uniform average of frequencies k/n and its binomial standard error."""
    g = len(freq_groups)
    val = sum(k / n for k, n in freq_groups) / g
    var = sum((k / n) * (1 - k / n) / n for k, n in freq_groups) / g**2
    return val, math.sqrt(max(var, 0.0))


def estimate(counts: CountTable) -> EstimateReport:
    c = counts.counts
    g12, g3 = [], []
    for x1, x2, z in product((0, 1), repeat=3):
        cell = c[x1, x2, 0, z]
        n = int(cell.sum())
        if n == 0:
            raise InsufficientDataError(f"no counts for setting x1={x1} x2={x2} y=0 z={z}")
        g12.append((cell[:, x1, 0, :].sum(), cell[x2, :, 1, :].sum(), n))
    for y, z in product((0, 1), repeat=2):
        bc = c[0, 0, y, z].sum(axis=(0, 1))
        n = int(bc.sum())
        if n == 0:
            raise InsufficientDataError(f"no counts for setting x1=0 x2=0 y={y} z={z}")
        g3.append((sum(bc[b, b ^ (y * z)] for b in (0, 1)), n))
    t1 = _term([(k1, n) for k1, _, n in g12])
    t2 = _term([(k2, n) for _, k2, n in g12])
    t3 = _term(g3)
    vals = (float(t1[0]), float(t2[0]), float(t3[0]))
    stds = (t1[1], t2[1], t3[1])
    from .inequality import vbc_functional

    _, std_multi = estimate_functional(counts, vbc_functional())
    return EstimateReport(vals, stds, sum(vals), math.sqrt(sum(s * s for s in stds)), std_multi, counts.detected)


def estimate_functional(counts: CountTable, f: LinearFunctional) -> tuple[float, float]:
    """Plug-in value of a linear functional and its multinomial standard error.

    Settings are independent given their round counts, so the variance is
    ``sum_s (sum_o c^2 p - (sum_o c p)^2) / n_s``.
    """
    coef = f.coefficients().reshape(16, 16)
    c = counts.counts.reshape(16, 16).astype(float)
    n = c.sum(axis=1)
    used = np.any(coef != 0, axis=1)
    if np.any(n[used] == 0):
        raise InsufficientDataError("a setting used by the functional has no counts")
    value, var = 0.0, 0.0
    for s in np.flatnonzero(used):
        p = c[s] / n[s]
        m1 = float(coef[s] @ p)
        var += (float(coef[s] ** 2 @ p) - m1**2) / n[s]
        value += m1
    return value, math.sqrt(max(var, 0.0))


# ------------------------------------------------------ statistical no-signaling

THREE_SIGMA_TAIL = 2 * norm.sf(3.0)


@dataclass(frozen=True)
class ConstraintCheck:
    comparisons: int
    max_abs_z: float
    threshold: float
    exceed_3sigma: int
    flagged: bool

    def to_dict(self) -> dict:
        return {
            "comparisons": self.comparisons,
            "max_abs_z": self.max_abs_z,
            "threshold": self.threshold,
            "exceed_3sigma": self.exceed_3sigma,
            "flagged": self.flagged,
        }


@dataclass(frozen=True)
class StatNoSignalingReport:
    checks: dict[str, ConstraintCheck]
    rule: str

    @property
    def flagged(self) -> bool:
        return any(c.flagged for c in self.checks.values())

    def to_dict(self) -> dict:
        return {"rule": self.rule, "flagged": self.flagged, "constraints": {k: v.to_dict() for k, v in self.checks.items()}}


def _zscores(arr: np.ndarray) -> np.ndarray:
    """Pooled two-proportion z statistics.

    ``arr`` has axes (signalling input, context, outcome). Every pair of
    signalling values is compared cell by cell within each context; cells
    where either side has no rounds or the pooled frequency is 0 or 1 are
    skipped.
    """
    n = arr.sum(axis=-1)
    zs = []
    for s1, s2 in combinations(range(arr.shape[0]), 2):
        n1, n2 = n[s1][:, None], n[s2][:, None]
        ok = (n1 > 0) & (n2 > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            p1, p2 = arr[s1] / n1, arr[s2] / n2
            pool = (arr[s1] + arr[s2]) / (n1 + n2)
            se = np.sqrt(pool * (1 - pool) * (1 / n1 + 1 / n2))
            z = (p1 - p2) / se
        keep = np.broadcast_to(ok, z.shape) & (pool > 0) & (pool < 1)
        zs.append(z[keep])
    return np.concatenate(zs) if zs else np.zeros(0)


def nosignal_stat_check(counts: CountTable, rule: str = "familywise") -> StatNoSignalingReport:
    """Compare empirical marginals across the values of each forbidden-signal input.

    rule "per-comparison" flags any cell differing by more than three pooled
    standard errors. rule "familywise" (default) flags a constraint when its
    largest |z| exceeds the Sidak-corrected threshold at which the whole
    family of comparisons has the two-sided 3-sigma false-alarm rate.
    """
    if rule not in ("familywise", "per-comparison"):
        raise ConfigError(f"unknown rule {rule!r}")
    m = no_signaling_marginals(counts.counts)
    shaped = {
        "i": m["i"].reshape(2, 8, 8),
        "ii": m["ii"].reshape(8, 2, 2),
        "iii": m["iii"].reshape(2, 8, 4),
    }
    checks = {}
    for name, arr in shaped.items():
        z = np.abs(_zscores(arr))
        k = int(z.size)
        if rule == "familywise" and k > 0:
            thr = float(norm.isf((1 - (1 - THREE_SIGMA_TAIL) ** (1 / k)) / 2))
        else:
            thr = 3.0
        zmax = float(z.max()) if k else 0.0
        checks[name] = ConstraintCheck(k, zmax, thr, int(np.sum(z > 3.0)), bool(zmax > thr))
    return StatNoSignalingReport(checks, rule)


# ---------------------------------------------------------------------- I/O


def write_counts(table: CountTable, csv_path: str | Path) -> Path:
    """Write nonzero cells to CSV and the sampling metadata to a JSON sidecar.

    The sidecar sits next to the CSV with suffix ``.json``; its path is returned.
    """
    csv_path = Path(csv_path)
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*AXES, "count"])
        for idx in zip(*np.nonzero(table.counts)):
            w.writerow([*(int(i) for i in idx), int(table.counts[idx])])
    side = csv_path.with_suffix(".json")
    side.write_text(json.dumps(table.metadata(), indent=2, sort_keys=True) + "\n")
    return side


def read_counts(csv_path: str | Path) -> CountTable:
    csv_path = Path(csv_path)
    meta = json.loads(csv_path.with_suffix(".json").read_text())
    counts = np.zeros(SHAPE, dtype=np.int64)
    with csv_path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != [*AXES, "count"]:
            raise ConfigError(f"unexpected CSV header {reader.fieldnames}")
        for row in reader:
            counts[tuple(int(row[a]) for a in AXES)] += int(row["count"])
    return CountTable(
        counts, meta["rounds"], meta["seed"], meta["efficiency"], meta.get("mode", "iid"),
        meta.get("block_size", DEFAULT_BLOCK),
    )
