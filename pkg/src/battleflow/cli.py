"""Command-line entry points: validate, run, ensemble.

Output directories default to ``./runs`` or the BFM_OUT environment
variable. ``run`` is RNG-free; all randomness flows through the ensemble
module's seeded per-case streams.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import ensemble as ensemble_mod
from .output import RunWriter
from .scenario_io import ScenarioError, load_ensemble_spec, load_scenario
from .solver import run as run_solver
from .units import BLUE, RED


def _out_root(arg) -> Path:
    if arg:
        return Path(arg)
    return Path(os.environ.get("BFM_OUT", "runs"))


def cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    grid = scenario.terrain.grid
    p = scenario.params
    cfl_limit = grid.ds / (2.0 * p.v_max)
    report = {
        "scenario": scenario.name,
        "grid": {"nx": grid.nx, "ny": grid.ny, "ds": grid.ds,
                 "extent_m": list(grid.extent)},
        "blue_infantry": scenario.side_strength(BLUE),
        "red_infantry": scenario.side_strength(RED),
        "blue_guns": scenario.side_guns(BLUE),
        "red_guns": scenario.side_guns(RED),
        "flow_units": len(scenario.units),
        "batteries": len(scenario.artillery),
        "dt_s": scenario.dt,
        "duration_s": scenario.duration,
        "steps": scenario.n_steps,
        "cfl_margin": scenario.dt / cfl_limit,
        "terrain_effects": scenario.terrain_effects,
        "params": {
            "v_max": p.v_max, "rho_max": p.rho_max, "k_close": p.k_close,
            "k_ranged_infantry": p.k_ranged_infantry,
            "k_ranged_artillery": p.k_ranged_artillery,
            "r0_infantry": p.r0_infantry, "r0_artillery": p.r0_artillery,
            "fire_norm": p.fire_norm, "loss_ref": p.loss_ref,
        },
    }
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(f"scenario: {report['scenario']}")
        print(f"grid: {grid.nx} x {grid.ny} cells at {grid.ds} m "
              f"({grid.extent[0]:.0f} x {grid.extent[1]:.0f} m)")
        print(f"Blue infantry {report['blue_infantry']:.0f}, "
              f"Red infantry {report['red_infantry']:.0f}")
        print(f"Blue guns {report['blue_guns']}, Red guns {report['red_guns']}")
        print(f"dt = {scenario.dt} s over {report['steps']} steps "
              f"(CFL margin {report['cfl_margin']:.2f} of the limit)")
        print("parameters: " + ", ".join(f"{k}={v}" for k, v in report["params"].items()))
    return 0


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.terrain == "off":
        scenario.terrain_effects = False
    if args.snapshots is not None:
        scenario.snapshot_interval = float(args.snapshots)
    out_dir = _out_root(args.out) / scenario.name
    writer = RunWriter(out_dir, scenario, fields=not args.no_fields)
    result = run_solver(scenario, tiles=args.tiles, writer=writer, progress=args.progress)
    print(f"run complete: {out_dir}")
    print(f"  blue: {result.side_initial(BLUE):.0f} -> {result.side_final(BLUE):.0f} "
          f"({result.side_casualties(BLUE):.0f} casualties)")
    print(f"  red:  {result.side_initial(RED):.0f} -> {result.side_final(RED):.0f} "
          f"({result.side_casualties(RED):.0f} casualties)")
    print(f"  red retreat fraction of survivors: "
          f"{result.retreat_fraction_of_survivors(RED):.3f}")
    print(f"  wall time: {result.wall_seconds:.1f} s")
    return 0


def _parse_cases(text: str) -> list[int]:
    if ".." in text:
        a, b = text.split("..", 1)
        lo, hi = int(a), int(b)
        if hi < lo:
            raise ValueError(f"bad case range {text!r}")
        return list(range(lo, hi + 1))
    return [int(text)]


def cmd_ensemble(args) -> int:
    spec = load_ensemble_spec(args.spec) if args.spec else ensemble_mod.PerturbationSpec()
    if args.cases:
        case_ids = _parse_cases(args.cases)
    else:
        case_ids = list(range(0, spec.cases + 1))
    out_dir = _out_root(args.out)
    workers = args.workers or os.cpu_count() or 1
    try:
        summary = ensemble_mod.run_cases(
            args.scenario, case_ids, spec, out_dir,
            workers=workers, tiles=args.tiles, progress=args.progress,
        )
    except ensemble_mod.EnsembleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"ensemble complete: {len(summary.rows)} cases -> {out_dir}")
    for cls, frac in summary.fractions.items():
        print(f"  {cls}: {frac:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="battleflow",
        description="Continuum battle-flow simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and sanity-check a scenario")
    p.add_argument("--scenario", required=True, help="scenario YAML file")
    p.add_argument("--json", action="store_true", help="emit the report as JSON")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run a single scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--terrain", choices=["on", "off"], default="on",
                   help="'off' disables slope and overlay effects")
    p.add_argument("--snapshots", type=float, default=None,
                   help="snapshot cadence in simulated seconds")
    p.add_argument("--out", default=None, help="output root (default runs/ or $BFM_OUT)")
    p.add_argument("--tiles", type=int, default=1, help="row-slab tile count")
    p.add_argument("--no-fields", action="store_true",
                   help="skip binary field snapshots (time series only)")
    p.add_argument("--progress", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ensemble", help="run a randomized ensemble")
    p.add_argument("--scenario", required=True, help="baseline scenario YAML")
    p.add_argument("--spec", default=None, help="ensemble spec YAML")
    p.add_argument("--cases", default=None,
                   help="case id or inclusive range a..b (default 0..spec.cases)")
    p.add_argument("--workers", type=int, default=None,
                   help="parallel case workers (default: cpu count)")
    p.add_argument("--out", default=None)
    p.add_argument("--tiles", type=int, default=1)
    p.add_argument("--progress", action="store_true")
    p.set_defaults(func=cmd_ensemble)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
