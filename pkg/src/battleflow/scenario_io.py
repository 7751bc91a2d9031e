"""Structured-text (YAML) loaders for terrain files, scenarios, ensembles.

Terrain file schema::

    grid: {nx: int, ny: int, ds: float, origin: [x, y]}
    base_speed: 1.0          # open-field overlay value, in (0, 1]
    smoothing_passes: 3      # 3x3 averaging sweeps applied to the overlay
    elevation:
      source: binary | inline
      file: elevation.bin    # binary: raw float64 little-endian, row-major
      values: [...]          # inline: flat row-major list or nested rows
    features:
      - name: str            # optional label
        kind: polygon | line | point
        value: float         # overlay multiplier at the feature, in [0, 1]
        scale: float         # decay scale (m); line/point only
        vertices: [[x, y], ...]

Scenario file schema::

    name: str
    terrain: path            # relative to the scenario file
    dt: 1.0
    duration: 3600.0
    terrain_effects: true
    snapshot_interval: 60.0
    params: {v_max, rho_max, k_close, k_ranged_infantry, ...}
    units:
      - id: int
        side: red | blue
        name: str
        morale: float
        strength: float
        formation: {center: [x, y], width: m, depth: m, bearing_deg: deg}
        stretch: [a, b]      # optional goal-shape factors
        march_speed: float   # optional per-unit override
        orders:
          - {kind: wait_enemy_within, range: m}
          - {kind: rotate_to, bearing_deg: deg}
          - {kind: translate_to, to: [x, y]}
          - {kind: flank, to: [x, y], bearing_deg: deg}
          - {kind: face_nearest_enemy}
    artillery:
      - {id: int, side: str, name: str, position: [x, y], guns: int}

Ensemble spec schema::

    cases: int
    position_sigma: 100.0
    bearing_sigma_deg: 10.0
    scale_band: [0.8, 1.2]
    combat_band: [0.5, 2.0]
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import yaml

from . import command
from .terrain import Grid, TerrainFeature, TerrainMap, rasterize_features, smooth_overlay
from .units import (
    BLUE,
    RED,
    ArtilleryUnit,
    FormationSpec,
    GlobalParams,
    Scenario,
    UnitDef,
)

_PARAM_KEYS = {
    "v_max", "rho_max", "diffusion", "k_close", "k_ranged_infantry",
    "k_ranged_artillery", "r0_infantry", "r0_artillery", "loss_ref",
    "fire_norm", "closein_floor", "march_speed", "rotate_rate", "morale_bonus",
}
_PARAM_DEG_KEYS = {"alpha_r_deg": "alpha_r", "theta_r_deg": "theta_r"}


class ScenarioError(ValueError):
    """Schema violation with a field path for diagnostics."""


def _req(mapping, key, where):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ScenarioError(f"{where}: missing required field '{key}'")
    return mapping[key]


def _num(value, where):
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ScenarioError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _point(value, where):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ScenarioError(f"{where}: expected an [x, y] pair, got {value!r}")
    return (_num(value[0], where), _num(value[1], where))


def _load_yaml(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: top level must be a mapping")
    return doc


def load_terrain(path) -> TerrainMap:
    path = Path(path)
    doc = _load_yaml(path)
    gsec = _req(doc, "grid", str(path))
    grid = Grid(
        nx=int(_num(_req(gsec, "nx", "grid"), "grid.nx")),
        ny=int(_num(_req(gsec, "ny", "grid"), "grid.ny")),
        ds=_num(_req(gsec, "ds", "grid"), "grid.ds"),
        origin=_point(gsec.get("origin", [0.0, 0.0]), "grid.origin"),
    )

    esec = _req(doc, "elevation", str(path))
    source = _req(esec, "source", "elevation")
    if source == "binary":
        efile = path.parent / _req(esec, "file", "elevation")
        if not efile.exists():
            raise ScenarioError(f"elevation.file: {efile} not found")
        data = np.fromfile(efile, dtype="<f8")
        if data.size != grid.nx * grid.ny:
            raise ScenarioError(
                f"elevation.file: expected {grid.nx * grid.ny} values, got {data.size}"
            )
        elevation = data.reshape(grid.ny, grid.nx)
    elif source == "inline":
        values = np.asarray(_req(esec, "values", "elevation"), dtype=float)
        if values.size != grid.nx * grid.ny:
            raise ScenarioError(
                f"elevation.values: expected {grid.nx * grid.ny} values, got {values.size}"
            )
        elevation = values.reshape(grid.ny, grid.nx)
    else:
        raise ScenarioError(f"elevation.source: unknown source {source!r}")

    features = []
    for k, fsec in enumerate(doc.get("features", []) or []):
        where = f"features[{k}]"
        kind = _req(fsec, "kind", where)
        vertices = [_point(v, f"{where}.vertices") for v in _req(fsec, "vertices", where)]
        features.append(
            TerrainFeature(
                kind=kind,
                value=_num(_req(fsec, "value", where), f"{where}.value"),
                geometry=vertices,
                scale=_num(fsec["scale"], f"{where}.scale") if "scale" in fsec else None,
                name=str(fsec.get("name", "")),
            )
        )

    base_speed = _num(doc.get("base_speed", 1.0), "base_speed")
    overlay = rasterize_features(grid, base_speed, features)
    tmap = TerrainMap(grid, elevation, overlay)
    passes = int(_num(doc.get("smoothing_passes", 0), "smoothing_passes"))
    if passes:
        tmap = smooth_overlay(tmap, passes)
    return tmap


def _parse_order(osec, where):
    kind = _req(osec, "kind", where)
    if kind == "wait_enemy_within":
        return command.WaitUntilEnemyWithin(_num(_req(osec, "range", where), f"{where}.range"))
    if kind == "rotate_to":
        return command.RotateTo(math.radians(_num(_req(osec, "bearing_deg", where), where)))
    if kind == "translate_to":
        return command.TranslateTo(_point(_req(osec, "to", where), f"{where}.to"))
    if kind == "face_nearest_enemy":
        return command.FaceNearestEnemy()
    if kind == "flank":
        return command.Flank(
            _point(_req(osec, "to", where), f"{where}.to"),
            math.radians(_num(_req(osec, "bearing_deg", where), where)),
        )
    raise ScenarioError(f"{where}: unknown order kind {kind!r}")


def parse_params(psec) -> GlobalParams:
    params = GlobalParams()
    for key, value in (psec or {}).items():
        if key in _PARAM_KEYS:
            setattr(params, key, _num(value, f"params.{key}"))
        elif key in _PARAM_DEG_KEYS:
            setattr(params, _PARAM_DEG_KEYS[key], math.radians(_num(value, f"params.{key}")))
        else:
            raise ScenarioError(f"params: unknown parameter {key!r}")
    return params


def load_scenario(path) -> Scenario:
    path = Path(path)
    doc = _load_yaml(path)
    terrain_path = path.parent / _req(doc, "terrain", str(path))
    terrain = load_terrain(terrain_path)
    params = parse_params(doc.get("params"))

    units = []
    for k, usec in enumerate(_req(doc, "units", str(path)) or []):
        where = f"units[{k}]"
        side = _req(usec, "side", where)
        if side not in (RED, BLUE):
            raise ScenarioError(f"{where}.side: must be 'red' or 'blue', got {side!r}")
        fsec = _req(usec, "formation", where)
        formation = FormationSpec(
            center=_point(_req(fsec, "center", where), f"{where}.formation.center"),
            width=_num(_req(fsec, "width", where), f"{where}.formation.width"),
            depth=_num(_req(fsec, "depth", where), f"{where}.formation.depth"),
            bearing=math.radians(_num(_req(fsec, "bearing_deg", where), f"{where}.formation.bearing_deg")),
            strength=_num(_req(usec, "strength", where), f"{where}.strength"),
        )
        orders = [
            _parse_order(osec, f"{where}.orders[{m}]")
            for m, osec in enumerate(usec.get("orders", []) or [])
        ]
        stretch = usec.get("stretch", [1.0, 1.0])
        units.append(
            UnitDef(
                id=int(_num(_req(usec, "id", where), f"{where}.id")),
                side=side,
                name=str(usec.get("name", f"unit-{k}")),
                formation=formation,
                morale0=_num(_req(usec, "morale", where), f"{where}.morale"),
                orders=orders,
                stretch=(_num(stretch[0], where), _num(stretch[1], where)),
                march_speed=_num(usec["march_speed"], where) if "march_speed" in usec else None,
                k_ranged=_num(usec["k_ranged"], where) if "k_ranged" in usec else None,
                r0=_num(usec["r0"], where) if "r0" in usec else None,
            )
        )

    artillery = []
    for k, asec in enumerate(doc.get("artillery", []) or []):
        where = f"artillery[{k}]"
        side = _req(asec, "side", where)
        if side not in (RED, BLUE):
            raise ScenarioError(f"{where}.side: must be 'red' or 'blue', got {side!r}")
        artillery.append(
            ArtilleryUnit(
                id=int(_num(_req(asec, "id", where), f"{where}.id")),
                side=side,
                name=str(asec.get("name", f"battery-{k}")),
                position=_point(_req(asec, "position", where), f"{where}.position"),
                guns=int(_num(_req(asec, "guns", where), f"{where}.guns")),
                k_ranged=_num(asec.get("k_ranged", params.k_ranged_artillery), where),
                r0=_num(asec.get("r0", params.r0_artillery), where),
            )
        )

    scenario = Scenario(
        name=str(doc.get("name", path.stem)),
        terrain=terrain,
        units=units,
        artillery=artillery,
        params=params,
        dt=_num(doc.get("dt", 1.0), "dt"),
        duration=_num(_req(doc, "duration", str(path)), "duration"),
        terrain_effects=bool(doc.get("terrain_effects", True)),
        snapshot_interval=_num(doc.get("snapshot_interval", 60.0), "snapshot_interval"),
    )
    scenario.validate()
    return scenario


def load_ensemble_spec(path):
    from .ensemble import PerturbationSpec

    doc = _load_yaml(path)
    band = doc.get("scale_band", [0.8, 1.2])
    combat = doc.get("combat_band", [0.5, 2.0])
    return PerturbationSpec(
        cases=int(_num(doc.get("cases", 1000), "cases")),
        position_sigma=_num(doc.get("position_sigma", 100.0), "position_sigma"),
        bearing_sigma=math.radians(_num(doc.get("bearing_sigma_deg", 10.0), "bearing_sigma_deg")),
        scale_low=_num(band[0], "scale_band"),
        scale_high=_num(band[1], "scale_band"),
        combat_low=_num(combat[0], "combat_band"),
        combat_high=_num(combat[1], "combat_band"),
    )
