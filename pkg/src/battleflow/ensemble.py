"""Randomized ensembles: perturbation, victory classification, aggregation.

Case 0 is always the unperturbed baseline. Case k >= 1 seeds a PCG-64
stream with the case number and draws, in a frozen order, perturbations
for every unit and a global combat triple. The frozen draw order (see
``perturb_scenario``) keeps ensembles stable across code refactors.
"""

from __future__ import annotations

import copy
import json
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import command
from .output import RunWriter, load_result_json
from .solver import RunResult, run as run_solver
from .units import RED, Scenario

CONCLUSIVE_UNION = "conclusive-union"
THIN_UNION = "thin-union"
CONFEDERATE = "confederate"
VICTORY_CLASSES = (CONCLUSIVE_UNION, THIN_UNION, CONFEDERATE)


@dataclass
class PerturbationSpec:
    """Randomization bands for ensemble cases."""

    cases: int = 1000
    position_sigma: float = 100.0  # m, initial and goal positions
    bearing_sigma: float = math.radians(10.0)  # initial and final bearings
    scale_low: float = 0.8  # shape / morale / strength / march-speed band
    scale_high: float = 1.2
    combat_low: float = 0.5  # global k, k', R0 band
    combat_high: float = 2.0
    max_redraws: int = 20


class EnsembleError(RuntimeError):
    def __init__(self, failed_cases: dict):
        self.failed_cases = failed_cases
        ids = ", ".join(str(k) for k in sorted(failed_cases))
        super().__init__(f"ensemble cases failed: {ids}")


def _shift_orders(orders, goal_offset, bearing_offset):
    out = []
    for o in orders:
        if isinstance(o, command.TranslateTo):
            out.append(command.TranslateTo((o.point[0] + goal_offset[0],
                                            o.point[1] + goal_offset[1])))
        elif isinstance(o, command.Flank):
            out.append(command.Flank((o.point[0] + goal_offset[0],
                                      o.point[1] + goal_offset[1]),
                                     o.bearing + bearing_offset))
        elif isinstance(o, command.RotateTo):
            out.append(command.RotateTo(o.bearing + bearing_offset))
        else:
            out.append(copy.deepcopy(o))
    return out


def perturb_scenario(base: Scenario, case_id: int,
                     spec: PerturbationSpec | None = None) -> Scenario:
    """Deterministically perturbed copy of the base scenario.

    Draw order, per flow unit in list order:
      1-2. initial-position offset (two normals, sigma = position_sigma)
      3-4. goal-position offset applied to every waypoint (two normals)
      5.   initial-bearing offset (normal, sigma = bearing_sigma)
      6.   final-bearing offset applied to ordered bearings (normal)
      7-8. formation width and depth multipliers (uniform scale band)
      9-10. goal-stretch a and b multipliers (uniform)
      11.  morale multiplier (uniform)
      12.  strength multiplier (uniform)
      13.  march-speed multiplier (uniform)
    then per battery in list order: position offset (two normals);
    finally one global uniform [combat band] multiplier each for the
    close-in coefficient, the ranged coefficients, and the weapon ranges.

    A shape draw that would over-pack the formation (implied density above
    rho_max) redraws the four shape multipliers, at most ``max_redraws``
    times, consuming further values from the same stream.
    """
    spec = spec or PerturbationSpec()
    scenario = copy.deepcopy(base)
    scenario.name = f"{base.name}_case{case_id}"
    if case_id == 0:
        return scenario
    rng = np.random.Generator(np.random.PCG64(case_id))

    def uniform() -> float:
        return float(rng.uniform(spec.scale_low, spec.scale_high))

    for u in scenario.units:
        f = u.formation
        init_off = rng.normal(0.0, spec.position_sigma, 2)
        goal_off = rng.normal(0.0, spec.position_sigma, 2)
        bearing_off = float(rng.normal(0.0, spec.bearing_sigma))
        final_bearing_off = float(rng.normal(0.0, spec.bearing_sigma))
        mw, md = uniform(), uniform()
        sa, sb = uniform(), uniform()
        m_morale = uniform()
        m_strength = uniform()
        m_march = uniform()

        strength = f.strength * m_strength
        for _ in range(spec.max_redraws):
            if strength / (f.width * mw * f.depth * md) <= scenario.params.rho_max:
                break
            mw, md = uniform(), uniform()
            sa, sb = uniform(), uniform()

        u.formation = type(f)(
            center=(f.center[0] + init_off[0], f.center[1] + init_off[1]),
            width=f.width * mw,
            depth=f.depth * md,
            bearing=f.bearing + bearing_off,
            strength=strength,
        )
        u.morale0 = u.morale0 * m_morale
        u.stretch = (u.stretch[0] * sa, u.stretch[1] * sb)
        base_march = scenario.params.march_speed if u.march_speed is None else u.march_speed
        u.march_speed = base_march * m_march
        u.orders = _shift_orders(u.orders, goal_off, final_bearing_off)

    for a in scenario.artillery:
        off = rng.normal(0.0, spec.position_sigma, 2)
        a.position = (a.position[0] + off[0], a.position[1] + off[1])

    m_close = float(rng.uniform(spec.combat_low, spec.combat_high))
    m_ranged = float(rng.uniform(spec.combat_low, spec.combat_high))
    m_range = float(rng.uniform(spec.combat_low, spec.combat_high))
    p = scenario.params
    p.k_close *= m_close
    p.k_ranged_infantry *= m_ranged
    p.k_ranged_artillery *= m_ranged
    p.r0_infantry *= m_range
    p.r0_artillery *= m_range
    for a in scenario.artillery:
        a.k_ranged *= m_ranged
        a.r0 *= m_range
    return scenario


def classify(result: RunResult) -> str:
    """Victory class from the red retreat fractions at the final time.

    Half or more of the survivors in retreat is a conclusive union victory;
    at most 10% of the initial force in retreat is a confederate victory
    (the two clauses deliberately use different denominators); anything in
    between is a thin union victory. No red survivors counts as conclusive.
    """
    if result.side_final(RED) <= 0.0:
        return CONCLUSIVE_UNION
    if result.retreat_fraction_of_survivors(RED) >= 0.5:
        return CONCLUSIVE_UNION
    if result.retreat_fraction_of_initial(RED) <= 0.10:
        return CONFEDERATE
    return THIN_UNION


def classify_from_dict(doc: dict) -> str:
    """Classification from a stored per-case result document."""
    red = doc["sides"][RED]
    if red["final"] <= 0.0:
        return CONCLUSIVE_UNION
    if doc["red_retreat_fraction_of_survivors"] >= 0.5:
        return CONCLUSIVE_UNION
    if doc["red_retreat_fraction_of_initial"] <= 0.10:
        return CONFEDERATE
    return THIN_UNION


@dataclass
class EnsembleSummary:
    cases: list[int]
    rows: list[dict]
    fractions: dict[str, float]


def aggregate(rows: list[dict]) -> EnsembleSummary:
    """Class fractions and the per-case scatter table."""
    if not rows:
        raise ValueError("no ensemble results to aggregate")
    counts = {c: 0 for c in VICTORY_CLASSES}
    for row in rows:
        counts[row["victory_class"]] += 1
    n = len(rows)
    fractions = {c: counts[c] / n for c in VICTORY_CLASSES}
    return EnsembleSummary(
        cases=[row["case"] for row in rows],
        rows=rows,
        fractions=fractions,
    )


def case_dir(out_dir, case_id: int) -> Path:
    return Path(out_dir) / f"case_{case_id:04d}"


def _case_row(case_id: int, doc: dict) -> dict:
    return {
        "case": case_id,
        "blue_initial": doc["sides"]["blue"]["initial"],
        "red_initial": doc["sides"]["red"]["initial"],
        "blue_final": doc["sides"]["blue"]["final"],
        "red_final": doc["sides"]["red"]["final"],
        "blue_casualties": doc["sides"]["blue"]["casualties"],
        "red_casualties": doc["sides"]["red"]["casualties"],
        "red_retreat_fraction_of_survivors": doc["red_retreat_fraction_of_survivors"],
        "red_retreat_fraction_of_initial": doc["red_retreat_fraction_of_initial"],
        "victory_class": doc["victory_class"],
    }


def run_case(base: Scenario, case_id: int, spec: PerturbationSpec,
             out_dir, tiles: int = 1, fields: bool = False) -> dict:
    """Run one perturbed case and write its run directory; returns the row."""
    scenario = perturb_scenario(base, case_id, spec)
    cdir = case_dir(out_dir, case_id)
    writer = RunWriter(cdir, scenario, fields=fields)
    result = run_solver(scenario, tiles=tiles, writer=writer)
    doc = load_result_json(cdir / "result.json")
    doc["case"] = case_id
    doc["victory_class"] = classify(result)
    (cdir / "result.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return _case_row(case_id, doc)


def _case_worker(args) -> tuple[int, dict]:
    scenario_path, case_id, spec, out_dir, tiles = args
    from .scenario_io import load_scenario

    base = load_scenario(scenario_path)
    return case_id, run_case(base, case_id, spec, out_dir, tiles=tiles)


def run_cases(scenario_path, case_ids, spec: PerturbationSpec, out_dir,
              workers: int = 1, tiles: int = 1, progress: bool = False) -> EnsembleSummary:
    """Run (or resume) a set of cases and write the ensemble summary.

    A case whose ``result.json`` already exists is not re-run; failed cases
    are reported together at the end after the survivors are aggregated.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pending = []
    rows: dict[int, dict] = {}
    for cid in case_ids:
        marker = case_dir(out_dir, cid) / "result.json"
        if marker.exists():
            doc = load_result_json(marker)
            rows[cid] = _case_row(cid, doc)
        else:
            pending.append(cid)

    failed: dict[int, str] = {}
    if pending:
        if workers <= 1:
            from .scenario_io import load_scenario

            base = load_scenario(scenario_path)
            for cid in pending:
                try:
                    rows[cid] = run_case(base, cid, spec, out_dir, tiles=tiles)
                except Exception as exc:  # noqa: BLE001 - reported per case
                    failed[cid] = str(exc)
                if progress:
                    print(f"case {cid}: {rows[cid]['victory_class'] if cid in rows else 'FAILED'}",
                          flush=True)
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = {
                    pool.submit(_case_worker, (str(scenario_path), cid, spec, str(out_dir), tiles)): cid
                    for cid in pending
                }
                for fut in as_completed(futures):
                    cid = futures[fut]
                    try:
                        _, row = fut.result()
                        rows[cid] = row
                        if progress:
                            print(f"case {cid}: {row['victory_class']}", flush=True)
                    except Exception as exc:  # noqa: BLE001 - reported per case
                        failed[cid] = str(exc)

    summary = None
    if rows:
        summary = aggregate([rows[c] for c in sorted(rows)])
        write_summary(out_dir, summary)
    if failed:
        raise EnsembleError(failed)
    return summary


def write_summary(out_dir, summary: EnsembleSummary) -> None:
    import csv

    out_dir = Path(out_dir)
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        fieldnames = list(summary.rows[0].keys())
        w = csv.DictWriter(fh, fieldnames=fieldnames)
        w.writeheader()
        for row in summary.rows:
            w.writerow(row)
    doc = {"cases": len(summary.rows), "fractions": summary.fractions}
    (out_dir / "fractions.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_summary_rows(out_dir) -> list[dict]:
    import csv

    rows = []
    with open(Path(out_dir) / "summary.csv", "r", newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append(row)
    return rows
