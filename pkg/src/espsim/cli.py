"""Command-line entry point.

Subcommands: ``run`` a scenario, ``sweep`` a parameter grid over a
template scenario, ``validate`` a scenario file.  Exit codes: 0 ok,
1 validation error, 2 simulation fault.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import yaml

from .report import compute_metrics, export, sweep, write_sweep_csv
from .runner import run
from .scenario import ScenarioError, apply_overrides, load_scenario, scenario_from_dict


def _load_yaml(path: str) -> dict:
    doc = yaml.safe_load(Path(path).read_text())
    return doc if doc is not None else {}


def _cmd_run(args) -> int:
    overrides = {}
    if args.no_iesp:
        overrides["controllers.iesp_enabled"] = False
    if args.no_abs:
        overrides["controllers.abs_enabled"] = False
    try:
        doc = apply_overrides(_load_yaml(args.scenario), overrides)
        scenario = scenario_from_dict(doc)
    except ScenarioError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return 1
    trace = run(scenario)
    metrics = compute_metrics(trace, scenario)
    written = export(trace, metrics, args.out, plots=args.plots)
    for path in written:
        print(path)
    for key, value in metrics.as_dict().items():
        print(f"{key}: {value}")
    if trace.fault is not None:
        print(f"simulation fault: {trace.fault}", file=sys.stderr)
        return 2
    return 0


def _cmd_sweep(args) -> int:
    try:
        base = _load_yaml(args.template)
        scenario_from_dict(base)  # template must be valid on its own
        grid_doc = _load_yaml(args.grid)
        grid = grid_doc.get("parameters", grid_doc)
        if not isinstance(grid, dict) or not grid:
            raise ScenarioError(["grid file must map dotted scenario paths to value lists"])
    except ScenarioError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return 1
    rows = sweep(base, grid, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = write_sweep_csv(rows, out / "sweep.csv")
    print(path)
    faults = sum(1 for _, m in rows if m.fault)
    print(f"{len(rows)} runs, {faults} faulted")
    return 2 if faults else 0


def _cmd_validate(args) -> int:
    try:
        load_scenario(args.scenario)
    except ScenarioError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"{args.scenario}: ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="espsim",
        description="Vehicle dynamics simulator with a fuzzy stability program",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", default="out", help="output directory (default: out)")
    p_run.add_argument("--no-iesp", action="store_true", help="disable the stability program")
    p_run.add_argument("--no-abs", action="store_true", help="disable the anti-lock layer")
    p_run.add_argument("--plots", action="store_true", help="also write PNG figures")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a parameter grid over a template scenario")
    p_sweep.add_argument("template")
    p_sweep.add_argument("grid")
    p_sweep.add_argument("--out", default="out")
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_val = sub.add_parser("validate", help="check a scenario file")
    p_val.add_argument("scenario")
    p_val.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
