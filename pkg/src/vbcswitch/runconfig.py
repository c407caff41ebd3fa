"""Run configuration and functional definition files (JSON, strict schemas)."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import ConfigError
from .inequality import LinearFunctional, Term
from .switch import AngleSettings, CANONICAL_ANGLES, NoiseModel

log = logging.getLogger(__name__)

CONFIG_DIR_ENV = "VBCSWITCH_CONFIG_DIR"


def load_schema(name: str) -> dict:
    return json.loads(resources.files("vbcswitch").joinpath("schemas", f"{name}.schema.json").read_text())


def bundled_functional_path() -> Path:
    return Path(str(resources.files("vbcswitch").joinpath("data", "vbc.json")))


def parse_json(text: str, source: str) -> object:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def validate(instance, schema_name: str, source: str) -> None:
    validator = jsonschema.Draft202012Validator(load_schema(schema_name))
    errors = sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{source}: {where}: {e.message}")


# ------------------------------------------------------------------ functional


def functional_from_dict(data: dict, source: str = "<functional>") -> LinearFunctional:
    validate(data, "functional", source)
    terms = []
    for i, t in enumerate(data["terms"]):
        try:
            terms.append(
                Term(
                    float(t.get("coefficient", 1.0)),
                    t["event"],
                    dict(t.get("given", {})),
                    tuple(t["average"]) if "average" in t else None,
                )
            )
        except ConfigError as exc:
            raise ConfigError(f"{source}: terms/{i}: {exc}") from None
    if not terms:
        log.warning("%s: functional has no terms; it evaluates to 0", source)
    return LinearFunctional(tuple(terms), data.get("name", Path(source).stem))


def load_functional(path: str | Path) -> LinearFunctional:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read functional {path}: {exc.strerror}") from None
    return functional_from_dict(parse_json(text, str(path)), str(path))


# ---------------------------------------------------------------------- config


@dataclass(frozen=True)
class Sampling:
    rounds: int = 1_000_000
    seed: int = 0
    mode: str = "iid"
    block_size: int = 1 << 20
    nosignal_rule: str = "familywise"


@dataclass(frozen=True)
class Output:
    format: str = "json"
    path: str | None = None


@dataclass(frozen=True)
class RunConfig:
    noise: NoiseModel = NoiseModel()
    sampling: Sampling = Sampling()
    angles: AngleSettings = CANONICAL_ANGLES
    functional: str | None = None
    first_depends_on_input: bool = True
    scenario: dict | None = None
    output: Output = Output()
    base_dir: Path = field(default=Path("."), compare=False)

    @classmethod
    def from_dict(cls, data: dict, source: str = "<config>", base_dir: Path = Path(".")) -> "RunConfig":
        validate(data, "config", source)
        angles = CANONICAL_ANGLES
        if "angles" in data:
            angles = AngleSettings(tuple(data["angles"]["bob"]), tuple(data["angles"]["charlie"]))
        return cls(
            noise=NoiseModel(**data.get("noise", {})),
            sampling=Sampling(**data.get("sampling", {})),
            angles=angles,
            functional=data.get("functional"),
            first_depends_on_input=data.get("causal", {}).get("first_depends_on_input", True),
            scenario=data.get("scenario"),
            output=Output(**data.get("output", {})),
            base_dir=base_dir,
        )

    def to_dict(self) -> dict:
        """Echo of the effective configuration (every default filled in)."""
        d = {
            "noise": asdict(self.noise),
            "sampling": asdict(self.sampling),
            "angles": {"bob": list(self.angles.bob), "charlie": list(self.angles.charlie)},
            "causal": {"first_depends_on_input": self.first_depends_on_input},
            "output": {k: v for k, v in asdict(self.output).items() if v is not None},
        }
        if self.functional is not None:
            d["functional"] = self.functional
        if self.scenario is not None:
            d["scenario"] = self.scenario
        return d

    def functional_path(self) -> Path:
        if self.functional is None:
            return bundled_functional_path()
        p = Path(self.functional)
        return p if p.is_absolute() else self.base_dir / p


def resolve_config_path(path: str | None) -> Path | None:
    """Locate a config file; relative paths that do not exist are looked up in
    ``$VBCSWITCH_CONFIG_DIR``. With no path, ``$VBCSWITCH_CONFIG_DIR/default.json``
    is used when present."""
    cfg_dir = os.environ.get(CONFIG_DIR_ENV)
    if path is None:
        if cfg_dir and (Path(cfg_dir) / "default.json").is_file():
            return Path(cfg_dir) / "default.json"
        return None
    p = Path(path)
    if not p.exists() and not p.is_absolute() and cfg_dir and (Path(cfg_dir) / p).exists():
        return Path(cfg_dir) / p
    return p


def load_config(path: str | None) -> RunConfig:
    p = resolve_config_path(path)
    if p is None:
        return RunConfig()
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    data = parse_json(text, str(p))
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: top level must be an object")
    return RunConfig.from_dict(data, str(p), p.parent)
