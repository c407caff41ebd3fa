"""Event geometry in the lab frame and an auditor for the declared causal relations.

The auditor reports signed margins rather than bare verdicts: on a table-top
setup the spacelike requirement between Bob and the other parties is only
mimicked by fibre delays, and the margin shows by how much it is missed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import DEFAULT_GROUP_INDEX, SPEED_OF_LIGHT, TOL
from .errors import ConfigError

RELATIONS = ("spacelike", "first-not-after-second")


@dataclass(frozen=True)
class Event:
    label: str
    t: float  # seconds
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)  # metres

    def __post_init__(self):
        pos = tuple(float(p) for p in self.position)
        if len(pos) != 3 or not all(math.isfinite(v) for v in (*pos, self.t)):
            raise ConfigError(f"event {self.label!r} needs a finite time and 3-vector position")
        object.__setattr__(self, "position", pos)

    def shifted(self, dt: float = 0.0, dx: Sequence[float] = (0.0, 0.0, 0.0)) -> "Event":
        return Event(self.label, self.t + dt, tuple(np.add(self.position, dx)))


@dataclass(frozen=True)
class CausalRequirement:
    first: str
    second: str
    relation: str

    def __post_init__(self):
        if self.first == self.second:
            raise ConfigError(f"requirement relates {self.first!r} to itself")
        if self.relation not in RELATIONS:
            raise ConfigError(f"relation must be one of {RELATIONS}, got {self.relation!r}")


def interval_type(e1: Event, e2: Event) -> str:
    """'timelike', 'spacelike' or 'lightlike' from the sign of c^2 dt^2 - |dx|^2."""
    ct2 = (SPEED_OF_LIGHT * (e2.t - e1.t)) ** 2
    dx2 = float(np.sum(np.subtract(e2.position, e1.position) ** 2))
    s2 = ct2 - dx2
    if abs(s2) <= TOL.lightlike * max(ct2, dx2):
        return "lightlike"
    return "timelike" if s2 > 0 else "spacelike"


def fiber_delay(length: float, group_index: float = DEFAULT_GROUP_INDEX) -> float:
    """Propagation time in seconds through ``length`` metres of fibre."""
    if length < 0:
        raise ConfigError(f"fibre length must be nonnegative, got {length}")
    if group_index < 1:
        raise ConfigError(f"group index must be >= 1, got {group_index}")
    return length * group_index / SPEED_OF_LIGHT


@dataclass(frozen=True)
class RequirementResult:
    requirement: CausalRequirement
    satisfied: bool
    margin: float
    unit: str
    interval: str

    def to_dict(self) -> dict:
        r = self.requirement
        return {
            "first": r.first,
            "second": r.second,
            "relation": r.relation,
            "satisfied": self.satisfied,
            "margin": self.margin,
            "unit": self.unit,
            "interval": self.interval,
        }


@dataclass(frozen=True)
class SpacetimeReport:
    results: tuple[RequirementResult, ...]

    @property
    def ok(self) -> bool:
        return all(r.satisfied for r in self.results)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "requirements": [r.to_dict() for r in self.results]}


def check_requirements(events: Iterable[Event], reqs: Iterable[CausalRequirement]) -> SpacetimeReport:
    """Audit each requirement.

    spacelike: margin = |dx| - c|dt| in metres; satisfied when positive
    (a lightlike pair does not count as spacelike).
    first-not-after-second: margin = t_second - t_first in seconds;
    satisfied when nonnegative.
    """
    by_label = {}
    for e in events:
        if e.label in by_label:
            raise ConfigError(f"duplicate event label {e.label!r}")
        by_label[e.label] = e
    results = []
    for r in reqs:
        missing = [lab for lab in (r.first, r.second) if lab not in by_label]
        if missing:
            raise ConfigError(f"unknown event label(s) {missing}")
        e1, e2 = by_label[r.first], by_label[r.second]
        kind = interval_type(e1, e2)
        if r.relation == "spacelike":
            dist = float(np.linalg.norm(np.subtract(e2.position, e1.position)))
            margin = dist - SPEED_OF_LIGHT * abs(e2.t - e1.t)
            results.append(RequirementResult(r, kind == "spacelike", margin, "m", kind))
        else:
            margin = e2.t - e1.t
            results.append(RequirementResult(r, margin >= 0, margin, "s", kind))
    return SpacetimeReport(tuple(results))


def events_from_config(scenario: dict) -> tuple[list[Event], list[CausalRequirement]]:
    """Build events and requirements from the ``scenario`` config section.

    An event time is ``t`` (default 0) plus, when ``fiber_m`` is given, the
    delay through that many metres of fibre at ``group_index``.
    """
    n = scenario.get("group_index", DEFAULT_GROUP_INDEX)
    events = []
    for e in scenario.get("events", []):
        t = e.get("t", 0.0)
        if "fiber_m" in e:
            t += fiber_delay(e["fiber_m"], n)
        events.append(Event(e["label"], float(t), tuple(e.get("position", (0.0, 0.0, 0.0)))))
    reqs = [CausalRequirement(r["first"], r["second"], r["relation"]) for r in scenario.get("requirements", [])]
    return events, reqs
