"""Command-line entry point: ``vbcswitch <subcommand> [options]``.

Exit codes: 0 success, 1 configuration error, 2 insufficient data,
3 numerical failure, 4 internal error. Failures print a one-line JSON object
``{"error": {"category": ..., "message": ...}}`` on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .behavior import AXES, Behavior
from .causal import classical_bound, count_strategies, membership
from .errors import ConfigError, VbcError
from .inequality import canonical_total, check_no_signaling, evaluate_functional, evaluate_vbc, optimize_settings
from .runconfig import RunConfig, load_config, load_functional, load_schema
from .spacetime import check_requirements, events_from_config
from .stats import estimate, estimate_functional, nosignal_stat_check, sample_counts, sigmas_above_bound, write_counts
from .switch import IDEAL, NoiseModel, compute_behavior

SCHEMA_VERSION = "1.0"
SUBCOMMANDS = ("exact", "sample", "bound", "membership", "optimize", "spacetime", "reproduce-paper")
SWEEP_KEYS = ("visibility", "werner_p")

# values reported in the experiment
REPORTED = {
    "term1": (0.490, 0.004),
    "term2": (0.492, 0.004),
    "term3": (0.825, 0.009),
    "total": (1.807, 0.010),
    "sigmas": 5.7,
    "visibility": 0.980,
}
REPORTED_WERNER_P = 0.92  # solves (3 + p)/8 = 0.490

log = logging.getLogger("vbcswitch")


def _angles_dict(a) -> dict:
    return {"bob": list(a.bob), "charlie": list(a.charlie)}


def parse_sweep(text: str) -> tuple[str, list[float]]:
    """``KEY=A:B:STEP`` -> (key, values) with both endpoints included."""
    try:
        key, rng = text.split("=", 1)
        a, b, step = (float(v) for v in rng.split(":"))
    except ValueError:
        raise ConfigError(f"sweep must look like KEY=A:B:STEP, got {text!r}") from None
    if key not in SWEEP_KEYS:
        raise ConfigError(f"sweep key must be one of {SWEEP_KEYS}, got {key!r}")
    if step <= 0 or b < a:
        raise ConfigError(f"sweep needs A <= B and STEP > 0, got {text!r}")
    n = int(math.floor((b - a) / step + 1e-9)) + 1
    return key, [round(a + i * step, 12) for i in range(n)]


def exact_section(cfg: RunConfig, noise: NoiseModel | None = None) -> tuple[dict, Behavior]:
    noise = cfg.noise if noise is None else noise
    beh = compute_behavior(noise, cfg.angles)
    out = {
        "noise": asdict(noise),
        "angles": _angles_dict(cfg.angles),
        "vbc": evaluate_vbc(beh).to_dict(),
        "no_signaling": check_no_signaling(beh).to_dict(),
    }
    if cfg.functional is not None:
        out["functional_value"] = evaluate_functional(beh, load_functional(cfg.functional_path()))
    return out, beh


def sampled_section(cfg: RunConfig, noise: NoiseModel | None = None):
    noise = cfg.noise if noise is None else noise
    s = cfg.sampling
    beh = compute_behavior(noise, cfg.angles)
    table = sample_counts(beh, s.rounds, noise.efficiency, s.seed, s.mode, s.block_size)
    out = {
        "noise": asdict(noise),
        "counts": table.metadata(),
        "estimate": estimate(table).to_dict(),
        "no_signaling": nosignal_stat_check(table, s.nosignal_rule).to_dict(),
    }
    if cfg.functional is not None:
        v, sd = estimate_functional(table, load_functional(cfg.functional_path()))
        out["functional_estimate"] = {"value": v, "std": sd}
    return out, table


def bound_section(cfg: RunConfig) -> dict:
    f = load_functional(cfg.functional_path())
    value, strat = classical_bound(f, cfg.first_depends_on_input)
    return {
        "functional": f.name,
        "value": value,
        "strategy": strat.describe(),
        "strategies_enumerated": count_strategies(cfg.first_depends_on_input),
        "first_depends_on_input": cfg.first_depends_on_input,
    }


def membership_section(cfg: RunConfig, noise: NoiseModel | None = None) -> dict:
    noise = cfg.noise if noise is None else noise
    beh = compute_behavior(noise, cfg.angles)
    res = membership(beh, cfg.first_depends_on_input)
    out = res.to_dict()
    if res.separating is not None:
        out["separating_functional"] = [float(v) for v in res.separating]
    out["noise"] = asdict(noise)
    out["vbc_total"] = evaluate_vbc(beh).total
    return out


def run(subcommand: str, cfg: RunConfig, sweep: str | None = None) -> dict:
    """Execute a subcommand and return the report as a plain dict."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    if sweep is not None and subcommand != "exact":
        raise ConfigError("--sweep is only supported by 'exact'")
    results: dict = {}
    if subcommand == "exact":
        if sweep is None:
            results["exact"], _ = exact_section(cfg)
        else:
            key, values = parse_sweep(sweep)
            rows = []
            for v in values:
                noise = replace(cfg.noise, **{key: v})
                rep = evaluate_vbc(compute_behavior(noise, cfg.angles))
                rows.append({"visibility": noise.visibility, "werner_p": noise.werner_p,
                             "term1": rep.term1, "term2": rep.term2, "term3": rep.term3, "total": rep.total})
            results["sweep"] = {"key": key, "rows": rows}
    elif subcommand == "sample":
        results["sampled"], _ = sampled_section(cfg)
    elif subcommand == "bound":
        results["bound"] = bound_section(cfg)
    elif subcommand == "membership":
        results["membership"] = membership_section(cfg)
    elif subcommand == "optimize":
        angles, best = optimize_settings(cfg.noise)
        results["optimize"] = {
            "noise": asdict(cfg.noise),
            "angles": _angles_dict(angles),
            "best_total": best,
            "canonical_total": canonical_total(cfg.noise),
        }
    elif subcommand == "spacetime":
        if not cfg.scenario:
            raise ConfigError("spacetime needs a 'scenario' section in the config")
        events, reqs = events_from_config(cfg.scenario)
        results["spacetime"] = check_requirements(events, reqs).to_dict()
        if "description" in cfg.scenario:
            results["spacetime"]["description"] = cfg.scenario["description"]
    else:
        results.update(reproduce_paper(cfg))
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "subcommand": subcommand,
        "config": cfg.to_dict(),
        "results": results,
    }


def reproduce_paper(cfg: RunConfig) -> dict:
    """Ideal and noisy exact runs, a sampled run, the classical bound and the
    significance, next to the reported numbers."""
    noisy = NoiseModel(REPORTED["visibility"], REPORTED_WERNER_P, cfg.noise.efficiency)
    ideal_cfg = replace(cfg, functional=None)
    ideal, ideal_beh = exact_section(ideal_cfg, IDEAL)
    noisy_sec, _ = exact_section(ideal_cfg, noisy)
    sampled, _ = sampled_section(ideal_cfg, noisy)
    est = sampled["estimate"]
    rows = []
    for k, key in enumerate(("term1", "term2", "term3")):
        rows.append({
            "quantity": key,
            "reported": REPORTED[key][0],
            "reported_std": REPORTED[key][1],
            "ideal": ideal["vbc"][key],
            "model": noisy_sec["vbc"][key],
            "sampled": est["terms"][k]["value"],
            "sampled_std": est["terms"][k]["std"],
        })
    rows.append({
        "quantity": "total",
        "reported": REPORTED["total"][0],
        "reported_std": REPORTED["total"][1],
        "ideal": ideal["vbc"]["total"],
        "model": noisy_sec["vbc"]["total"],
        "sampled": est["total"],
        "sampled_std": est["total_std"],
    })
    rows.append({
        "quantity": "sigmas_above_bound",
        "reported": REPORTED["sigmas"],
        "reported_std": None,
        "ideal": None,
        "model": None,
        "sampled": est["sigmas_above_bound"],
        "sampled_std": None,
    })
    reported_total, reported_std = REPORTED["total"]
    return {
        "ideal": ideal,
        "noisy": noisy_sec,
        "sampled": sampled,
        "bound": bound_section(ideal_cfg),
        "membership": membership_section(ideal_cfg, IDEAL),
        "significance": {
            "reported": {"total": reported_total, "std": reported_std,
                         "sigmas_above_bound": sigmas_above_bound(reported_total, reported_std)},
            "sampled": {"total": est["total"], "std": est["total_std"],
                        "sigmas_above_bound": est["sigmas_above_bound"]},
        },
        "comparison": rows,
    }


# ---------------------------------------------------------------- rendering


def render_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def render_csv(report: dict, cfg: RunConfig, sweep: str | None) -> str:
    res = report["results"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if "sweep" in res:
        cols = ["visibility", "werner_p", "term1", "term2", "term3", "total"]
        w.writerow(cols)
        for row in res["sweep"]["rows"]:
            w.writerow([repr(row[c]) for c in cols])
    elif "exact" in res:
        beh = compute_behavior(cfg.noise, cfg.angles)
        w.writerow([*AXES, "probability"])
        for idx in np.ndindex(beh.table.shape):
            w.writerow([*idx, repr(float(beh.table[idx]))])
    elif "comparison" in res:
        cols = ["quantity", "reported", "reported_std", "ideal", "model", "sampled", "sampled_std"]
        w.writerow(cols)
        for row in res["comparison"]:
            w.writerow(["" if row[c] is None else row[c] for c in cols])
    else:
        raise ConfigError(f"csv output is not available for '{report['subcommand']}'")
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="override sampling.seed")
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), help="report format (default json)")
    common.add_argument("--sweep", metavar="KEY=A:B:STEP", help="exact only: sweep visibility or werner_p")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="vbcswitch", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    helps = {
        "exact": "exact behavior, VBC terms and no-signaling check",
        "sample": "finite-statistics run: counts, estimates, significance",
        "bound": "classical bound by enumeration of deterministic strategies",
        "membership": "LP test of the configured behavior against the causal polytope",
        "optimize": "search Bob's and Charlie's measurement angles",
        "spacetime": "audit the scenario's causal requirements",
        "reproduce-paper": "canonical pipeline compared with the reported values",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _fail(exc: VbcError) -> int:
    msg = json.dumps({"error": {"category": exc.category, "message": str(exc)}})
    print(msg, file=sys.stderr)
    return exc.exit_code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed must be in [0, 2^64)")
            cfg = replace(cfg, sampling=replace(cfg.sampling, seed=args.seed))
        fmt = args.format or cfg.output.format
        out_path = args.output or cfg.output.path
        if fmt == "csv" and args.subcommand == "sample":
            if out_path is None:
                raise ConfigError("csv count tables need --output PATH")
            _, table = sampled_section(cfg)
            write_counts(table, out_path)
            return 0
        report = run(args.subcommand, cfg, args.sweep)
        if fmt == "csv":
            text = render_csv(report, cfg, args.sweep)
        else:
            text = render_json(report)
        if out_path is None:
            sys.stdout.write(text)
        else:
            Path(out_path).write_text(text)
        return 0
    except VbcError as exc:
        return _fail(exc)
    except Exception as exc:  # noqa: BLE001 - mapped to the internal-error exit code
        log.debug("internal error", exc_info=True)
        return _fail(VbcError(f"{type(exc).__name__}: {exc}"))


def report_schema() -> dict:
    return load_schema("report")


if __name__ == "__main__":
    sys.exit(main())
