"""On-disk run outputs.

A run directory contains:

* ``series.csv``    - one row per snapshot time: time, per-unit strengths,
                      per-unit cumulative casualties, side totals.
* ``status.csv``    - per-unit status code at each snapshot time
                      (a=active, r=retreating, p=pressing, d=destroyed).
* ``result.json``   - machine-readable final summary.
* ``elevation.bin`` / ``overlay.bin`` - terrain rasters (written once).
* ``artillery.csv`` - battery positions for plotting.
* ``snap_tNNNNNN_<side>.bin`` + ``index.txt`` - per-side density snapshots
                      (only when field snapshots are enabled).

Binary rasters use a small header: magic ``BFM1``, uint32 nx, uint32 ny,
float64 ds, float64 origin x, float64 origin y, then ny*nx float64 cell
values, row-major (C order), little-endian.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .solver import RunResult, Simulation
from .terrain import Grid
from .units import BLUE, RED

MAGIC = b"BFM1"
_HEADER = struct.Struct("<4sII3d")

STATUS_CODES = {"active": "a", "retreating": "r", "pressing": "p"}


def write_raster(path, grid: Grid, values: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, grid.nx, grid.ny, grid.ds, *grid.origin))
        fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())


def read_raster(path):
    """Returns (values, grid) for a BFM1 raster file."""
    with open(path, "rb") as fh:
        magic, nx, ny, ds, ox, oy = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a BFM1 raster (magic {magic!r})")
        data = np.frombuffer(fh.read(8 * nx * ny), dtype="<f8").reshape(ny, nx)
    return data.copy(), Grid(nx, ny, ds, (ox, oy))


class RunWriter:
    """Streams a simulation's outputs into a run directory."""

    def __init__(self, run_dir, scenario, fields: bool = True):
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self.fields = fields
        self.scenario = scenario
        self._index_lines: list[str] = []
        grid = scenario.terrain.grid
        write_raster(self.run_dir / "elevation.bin", grid, scenario.terrain.elevation)
        write_raster(self.run_dir / "overlay.bin", grid, scenario.terrain.overlay)
        with open(self.run_dir / "artillery.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "side", "name", "x", "y", "guns"])
            for a in scenario.artillery:
                w.writerow([a.id, a.side, a.name, a.position[0], a.position[1], a.guns])

    def snapshot(self, sim: Simulation) -> None:
        if not self.fields:
            return
        t = int(round(sim.time))
        grid = sim.grid
        names = {}
        for side in (RED, BLUE):
            total = grid.zeros()
            for u in sim.units:
                if u.side != side or u.box is None:
                    continue
                j0, j1, i0, i1 = u.box
                total[j0:j1, i0:i1] += u.rho[j0:j1, i0:i1]
            name = f"snap_t{t:06d}_{side}.bin"
            write_raster(self.run_dir / name, grid, total)
            names[side] = name
        self._index_lines.append(f"{sim.time:.1f} {names[RED]} {names[BLUE]}")

    def finish(self, sim: Simulation, result: RunResult) -> None:
        write_series(self.run_dir / "series.csv", result)
        write_status(self.run_dir / "status.csv", result)
        write_result_json(self.run_dir / "result.json", result)
        if self.fields:
            (self.run_dir / "index.txt").write_text(
                "\n".join(self._index_lines) + "\n", encoding="utf-8"
            )
        result.run_dir = str(self.run_dir)


def write_series(path, result: RunResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["time_s"]
        header += [f"strength_{uid}" for uid in result.unit_ids]
        header += [f"casualties_{uid}" for uid in result.unit_ids]
        header += ["blue_total", "red_total"]
        w.writerow(header)
        cas = result.casualties
        blue = result.side_index(BLUE)
        red = result.side_index(RED)
        for k, t in enumerate(result.times):
            row = [f"{t:.1f}"]
            row += [f"{v:.4f}" for v in result.strengths[k]]
            row += [f"{v:.4f}" for v in cas[k]]
            row += [f"{result.strengths[k, blue].sum():.4f}",
                    f"{result.strengths[k, red].sum():.4f}"]
            w.writerow(row)


def write_status(path, result: RunResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s"] + [f"status_{uid}" for uid in result.unit_ids])
        for k, t in enumerate(result.times):
            codes = []
            for j, status in enumerate(result.statuses[k]):
                if result.strengths[k, j] < 1.0:
                    codes.append("d")
                else:
                    codes.append(STATUS_CODES.get(status, "?"))
            w.writerow([f"{t:.1f}"] + codes)


def write_result_json(path, result: RunResult) -> None:
    units = []
    for k, uid in enumerate(result.unit_ids):
        units.append(
            {
                "id": uid,
                "name": result.unit_names[k],
                "side": result.unit_sides[k],
                "initial_strength": float(result.initial_strengths[k]),
                "final_strength": float(result.strengths[-1, k]),
                "casualties_close": float(result.casualties_close[-1, k]),
                "casualties_ranged": float(result.casualties_ranged[-1, k]),
                "final_status": result.statuses[-1][k],
                "clamped_mass": float(result.clamped_mass[k]),
            }
        )
    doc = {
        "scenario": result.scenario_name,
        "duration_s": float(result.times[-1]),
        "wall_seconds": result.wall_seconds,
        "sides": {
            side: {
                "initial": result.side_initial(side),
                "final": result.side_final(side),
                "casualties": result.side_casualties(side),
            }
            for side in (BLUE, RED)
        },
        "red_retreat_fraction_of_survivors": result.retreat_fraction_of_survivors(RED),
        "red_retreat_fraction_of_initial": result.retreat_fraction_of_initial(RED),
        "units": units,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_result_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
