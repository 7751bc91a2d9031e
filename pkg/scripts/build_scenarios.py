#!/usr/bin/env python3
"""Generate the shipped sample battlefield and scenario files.

Writes scenarios/gettysburg/{terrain.yaml, elevation.bin, brigade.yaml,
army.yaml, ensemble.yaml} and scenarios/duel/{terrain.yaml, duel.yaml}.

The battlefield is schematic: two north-south ridges separated by a
~1.5 km farmed valley with a fence-lined north-south road, vegetation
polygons, farm buildings and a stone wall (with a salient angle) along
the eastern ridge. The unit roster, strengths, morale scores and gun
counts follow the historical brigade/battery tables; placements and
waypoints are simplified straight-line reconstructions.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import yaml

ROOT = Path(__file__).resolve().parents[1]
OUT = ROOT / "scenarios"

NX, NY, DS = 384, 309, 8.0  # 3072 m x 2472 m at 8 m resolution

# ---------------------------------------------------------------------------
# Terrain
# ---------------------------------------------------------------------------


def build_elevation() -> np.ndarray:
    x = (np.arange(NX) + 0.5) * DS
    y = (np.arange(NY) + 0.5) * DS
    X, Y = np.meshgrid(x, y)
    h = np.full((NY, NX), 150.0)
    h += 14.0 * np.exp(-(((X - 520.0) / 230.0) ** 2))  # western ridge
    h += 22.0 * np.exp(-(((X - 2340.0) / 210.0) ** 2))  # eastern ridge
    h += 8.0 * np.exp(-(((X - 2430.0) / 180.0) ** 2 + ((Y - 2180.0) / 180.0) ** 2))
    h += 12.0 * np.exp(-(((X - 2360.0) / 150.0) ** 2 + ((Y - 520.0) / 150.0) ** 2))
    return h


# Line features sit on cell centers (x = 4 mod 8) so the 8 m raster samples
# their full depth before smoothing.
FEATURES = [
    # vegetation polygons (constant multiplier inside); the farmed valley
    # floor is nearly covered by crop fields, as on the historical maps
    dict(name="West ridge woods (north)", kind="polygon", value=0.50,
         vertices=[[240, 1350], [520, 1350], [520, 2150], [240, 2150]]),
    dict(name="West ridge woods (south)", kind="polygon", value=0.50,
         vertices=[[280, 560], [560, 560], [560, 1040], [280, 1040]]),
    dict(name="Copse thicket", kind="polygon", value=0.50,
         vertices=[[2216, 1496], [2268, 1496], [2268, 1552], [2216, 1552]]),
    dict(name="Corn field (north)", kind="polygon", value=0.60,
         vertices=[[1156, 1250], [1420, 1250], [1420, 2060], [1156, 2060]]),
    dict(name="Grain field (north)", kind="polygon", value=0.65,
         vertices=[[1436, 1450], [1676, 1450], [1676, 2060], [1436, 2060]]),
    dict(name="Grain field (south)", kind="polygon", value=0.65,
         vertices=[[1156, 540], [1420, 540], [1420, 1240], [1156, 1240]]),
    dict(name="Corn field (south)", kind="polygon", value=0.60,
         vertices=[[1436, 540], [1676, 540], [1676, 1440], [1436, 1440]]),
    dict(name="Orchard", kind="polygon", value=0.55,
         vertices=[[1840, 1290], [2000, 1290], [2000, 1420], [1840, 1420]]),
    dict(name="Corn field (east farm)", kind="polygon", value=0.60,
         vertices=[[1756, 1150], [2116, 1150], [2116, 1850], [1756, 1850]]),
    dict(name="Grain field (east farm, south)", kind="polygon", value=0.65,
         vertices=[[1756, 640], [2116, 640], [2116, 1140], [1756, 1140]]),
    dict(name="Grain field (east farm, north)", kind="polygon", value=0.65,
         vertices=[[1756, 1860], [2116, 1860], [2116, 2150], [1756, 2150]]),
    # farm buildings: point features with error-function decay
    dict(name="Bliss farm", kind="point", value=0.05, scale=20.0,
         vertices=[[1500, 1600]]),
    dict(name="Codori farm", kind="point", value=0.05, scale=20.0,
         vertices=[[1764, 1228]]),
    # the fence-lined north-south road
    dict(name="Road", kind="line", value=1.00, scale=10.0,
         vertices=[[1700, 480], [1700, 2300]]),
    dict(name="Road fence (west)", kind="line", value=0.05, scale=10.0,
         vertices=[[1684, 520], [1684, 2260]]),
    dict(name="Road fence (east)", kind="line", value=0.05, scale=10.0,
         vertices=[[1716, 520], [1716, 2260]]),
    # field-boundary fences between the crop parcels
    dict(name="Worm fence (mid valley)", kind="line", value=0.10, scale=10.0,
         vertices=[[1428, 540], [1428, 2060]]),
    dict(name="Post and rail fence (west valley)", kind="line", value=0.05, scale=10.0,
         vertices=[[1148, 540], [1148, 2060]]),
    dict(name="Worm fence (east valley)", kind="line", value=0.10, scale=10.0,
         vertices=[[1956, 700], [1956, 2100]]),
    # the defended stone wall with its salient angle
    dict(name="Stone wall", kind="line", value=0.30, scale=10.0,
         vertices=[[2260, 2150], [2260, 1500], [2180, 1460], [2180, 1250],
                   [2260, 1200], [2260, 900]]),
]


def write_terrain() -> None:
    gdir = OUT / "gettysburg"
    gdir.mkdir(parents=True, exist_ok=True)
    elevation = build_elevation()
    elevation.astype("<f8").tofile(gdir / "elevation.bin")
    doc = {
        "grid": {"nx": NX, "ny": NY, "ds": DS, "origin": [0.0, 0.0]},
        "base_speed": 1.0,
        "smoothing_passes": 3,
        "elevation": {"source": "binary", "file": "elevation.bin"},
        "features": FEATURES,
    }
    (gdir / "terrain.yaml").write_text(yaml.safe_dump(doc, sort_keys=False), encoding="utf-8")


# ---------------------------------------------------------------------------
# Brigade-level scenario (Pickett's Charge roster)
# ---------------------------------------------------------------------------

BLUE_LINE_X = 2300.0
DEPTH = 35.0
RHO_FORM = 0.14  # persons/m^2 in the initial line


def _width(strength: float) -> float:
    return round(strength / (RHO_FORM * DEPTH), 1)


def _stack(y_top: float, entries, gap: float = 45.0):
    """Stack formations southward from y_top; returns center list."""
    centers = []
    y = y_top
    for strength in entries:
        w = _width(strength)
        centers.append(round(y - w / 2.0, 1))
        y -= w + gap
    return centers


def _unit(uid, side, name, morale, strength, center, bearing_deg, orders,
          march_speed=None):
    u = {
        "id": uid, "side": side, "name": name, "morale": morale,
        "strength": strength,
        "formation": {"center": [round(center[0], 1), round(center[1], 1)],
                      "width": _width(strength), "depth": DEPTH,
                      "bearing_deg": bearing_deg},
        "orders": orders,
    }
    if march_speed is not None:
        u["march_speed"] = march_speed
    return u


def _march(waypoints, rotate_first=True, wait=None):
    orders = []
    if wait is not None:
        orders.append({"kind": "wait_enemy_within", "range": wait})
    if rotate_first and waypoints:
        orders.append({"kind": "rotate_to_march"})  # placeholder, resolved below
    for wp in waypoints:
        orders.append({"kind": "translate_to", "to": [wp[0], wp[1]]})
    orders.append({"kind": "face_nearest_enemy"})
    return orders


def _resolve_march_bearings(units):
    """Replace rotate_to_march placeholders with the actual leg bearing."""
    for u in units:
        start = u["formation"]["center"]
        orders = u["orders"]
        for k, o in enumerate(orders):
            if o.get("kind") == "rotate_to_march":
                target = next(
                    (q["to"] for q in orders[k + 1:] if q["kind"] == "translate_to"), None
                )
                if target is None:
                    orders[k] = {"kind": "face_nearest_enemy"}
                else:
                    bearing = float(np.degrees(np.arctan2(target[1] - start[1],
                                                          target[0] - start[0])))
                    orders[k] = {"kind": "rotate_to", "bearing_deg": round(bearing, 2)}


def brigade_units():
    units = []

    # --- Union (Blue): main line along the eastern ridge, facing west.
    # Unit 1 combines the 8 Ohio and 126 New York detachments (141 + 150,
    # plus one to keep the army total at the published 8036).
    blue_line = [
        (2, "Willard", 0.7, 1030),
        (3, "Smyth", 0.7, 828),
        (4, "Webb", 0.7, 895),
        (5, "Hall", 0.7, 669),
        (7, "Harrow", 0.7, 831),
        (8, "Stannard", 0.7, 1715),
    ]
    centers = _stack(2130.0, [s for (_, _, _, s) in blue_line])
    hold = lambda y: _march([[BLUE_LINE_X - 35.0, y]], rotate_first=True, wait=500)
    for (uid, name, morale, strength), cy in zip(blue_line, centers):
        if name == "Stannard":
            orders = [
                {"kind": "wait_enemy_within", "range": 500},
                {"kind": "flank", "to": [1990.0, 1160.0], "bearing_deg": 90},
                {"kind": "face_nearest_enemy"},
            ]
        else:
            orders = hold(cy)
        units.append(_unit(uid, "blue", name, morale, strength,
                           (BLUE_LINE_X, cy), 180, orders))

    units.append(_unit(1, "blue", "8 OH / 126 NY", 0.7, 292, (1720.0, 2180.0), 180, [
        {"kind": "wait_enemy_within", "range": 500},
        {"kind": "flank", "to": [1400.0, 2080.0], "bearing_deg": -90},
        {"kind": "face_nearest_enemy"},
    ]))

    # Union second line / reserves
    for uid, name, morale, strength, cy in [
        (6, "Stone", 0.8, 745, 1800.0),
        (9, "Cross", 0.7, 632, 1560.0),
        (10, "Kelly", 0.7, 399, 1340.0),
    ]:
        units.append(_unit(uid, "blue", name, morale, strength, (2400.0, cy), 180,
                           hold(cy)))

    # --- Confederate (Red): assault columns on the western ridge, facing east.
    north_front = [
        (11, "Brockenbrough", 0.8, 829, [[2250.0, 1950.0]]),
        (13, "Davis", 0.8, 1484, [[2255.0, 1790.0]]),
        (15, "Marshall", 0.8, 1495, [[2260.0, 1620.0]]),
        (16, "Fry", 0.8, 739, [[2230.0, 1500.0]]),
    ]
    centers = _stack(2230.0, [s for (_, _, _, s, _) in north_front])
    for (uid, name, morale, strength, wps), cy in zip(north_front, centers):
        units.append(_unit(uid, "red", name, morale, strength, (850.0, cy), 0,
                           _march(wps), march_speed=1.0))

    # Pender's second wave behind the northern group
    units.append(_unit(12, "red", "Lane", 0.7, 1203, (700.0, 1990.0), 0,
                       _march([[2240.0, 1840.0]]), march_speed=1.0))
    units.append(_unit(14, "red", "Lowrance", 0.7, 879, (700.0, 1530.0), 0,
                       _march([[2250.0, 1560.0]]), march_speed=1.0))

    # Pickett's division to the south, angling northeast
    units.append(_unit(18, "red", "Garnett", 1.0, 824, (870.0, 1120.0), 0,
                       _march([[1560.0, 1250.0], [2230.0, 1430.0]]), march_speed=1.0))
    units.append(_unit(19, "red", "Kemper", 1.0, 1163, (870.0, 880.0), 0,
                       _march([[1600.0, 1050.0], [2250.0, 1320.0]]), march_speed=1.0))
    units.append(_unit(17, "red", "Armistead", 1.0, 1223, (730.0, 1000.0), 0,
                       _march([[1520.0, 1150.0], [2220.0, 1380.0]]), march_speed=1.0))

    # Anderson's late supports in the far south
    units.append(_unit(20, "red", "Lang", 0.7, 437, (820.0, 620.0), 0,
                       _march([[2250.0, 950.0]]), march_speed=1.0))
    units.append(_unit(21, "red", "Wilcox", 0.7, 1205, (820.0, 440.0), 0,
                       _march([[2250.0, 800.0]]), march_speed=1.0))

    _resolve_march_bearings(units)
    return units


UNION_BATTERIES = [
    (22, "Bancroft / Wilkeson", 6, (2400.0, 2150.0)),
    (23, "Mason / Eakin", 6, (2400.0, 2050.0)),
    (24, "Edgell", 4, (2400.0, 1950.0)),
    (25, "Hill", 4, (2400.0, 1850.0)),
    (26, "Norton", 6, (2400.0, 1760.0)),
    (27, "McCartney", 6, (2400.0, 1680.0)),
    (28, "Woodruff", 6, (2400.0, 1600.0)),
    (29, "Milton / Bigelow", 6, (2400.0, 1520.0)),
    (30, "Arnold", 6, (2400.0, 1450.0)),
    (31, "Cushing", 6, (2400.0, 1380.0)),
    (32, "Brown / Perrin", 6, (2400.0, 1300.0)),
    (33, "Rorty", 4, (2400.0, 1220.0)),
    (34, "Daniels + Thomas", 12, (2380.0, 1010.0)),
    (35, "Hart + Phillips + Thompson", 15, (2380.0, 880.0)),
    (36, "Rank", 2, (2400.0, 2250.0)),
]

CONFED_BATTERIES = [
    (37, "Brander", 4), (38, "McGraw", 4), (39, "Brunson / Zimmerman", 4),
    (40, "Johnston", 4), (41, "Marye", 4), (42, "Ross", 6), (43, "Wingfield", 5),
    (44, "Graham", 4), (45, "Wyatt", 4), (46, "Brooke", 4), (47, "Ward", 4),
    (48, "Woolfolk", 4), (49, "Blount", 4), (50, "Caskie", 4), (51, "Macon", 4),
    (52, "Stribling", 6), (53, "Richardson", 3), (54, "Norcom", 3),
    (55, "Miller", 3), (56, "Taylor", 4), (57, "Gilbert", 4),
]


def brigade_artillery():
    batteries = []
    for uid, name, guns, pos in UNION_BATTERIES:
        batteries.append({"id": uid, "side": "blue", "name": name,
                          "position": [pos[0], pos[1]], "guns": guns})
    # Confederate batteries carry a reduced fire coefficient: the shipped
    # scenario opens after the preliminary barrage spent most of their
    # long-range ammunition.
    y = 2150.0
    for uid, name, guns in CONFED_BATTERIES[:11]:
        batteries.append({"id": uid, "side": "red", "name": name,
                          "position": [950.0, y], "guns": guns,
                          "k_ranged": 10.0})
        y -= 100.0
    # second line covering the southern columns, x = 1020
    y = 1400.0
    for uid, name, guns in CONFED_BATTERIES[11:]:
        batteries.append({"id": uid, "side": "red", "name": name,
                          "position": [1020.0, y], "guns": guns,
                          "k_ranged": 10.0})
        y -= 80.0
    return batteries


BRIGADE_PARAMS = {
    "v_max": 1.4,
    "rho_max": 5.6,
    "k_close": 5.0e-2,
    "k_ranged_infantry": 8.0,
    "k_ranged_artillery": 16.0,
    "r0_infantry": 100.0,
    "r0_artillery": 1200.0,
    "loss_ref": 0.35,
    "fire_norm": 6.3e6,
    "march_speed": 0.6,
}


def write_brigade() -> None:
    doc = {
        "name": "brigade",
        "terrain": "terrain.yaml",
        "dt": 1.0,
        "duration": 3600.0,
        "terrain_effects": True,
        "snapshot_interval": 60.0,
        "params": BRIGADE_PARAMS,
        "units": brigade_units(),
        "artillery": brigade_artillery(),
    }
    (OUT / "gettysburg" / "brigade.yaml").write_text(
        yaml.safe_dump(doc, sort_keys=False), encoding="utf-8"
    )


def write_army() -> None:
    params = dict(BRIGADE_PARAMS)
    params["k_ranged_infantry"] = 2.0
    params["k_ranged_artillery"] = 4.0
    params["fire_norm"] = 2.8e6
    units = [
        {
            "id": 1, "side": "blue", "name": "Union infantry", "morale": 1.0,
            "strength": 8036,
            "formation": {"center": [2430.0, 1500.0], "width": 1700.0,
                          "depth": 48.0, "bearing_deg": 180},
            "k_ranged": 0.5,
            "orders": [
                {"kind": "wait_enemy_within", "range": 500},
                {"kind": "rotate_to", "bearing_deg": 180},
                {"kind": "translate_to", "to": [2300.0, 1500.0]},
                {"kind": "face_nearest_enemy"},
            ],
        },
        {
            "id": 2, "side": "red", "name": "Confederate infantry", "morale": 1.0,
            "strength": 11481,
            "formation": {"center": [900.0, 1500.0], "width": 1900.0,
                          "depth": 60.0, "bearing_deg": 0},
            "march_speed": 1.0,
            "k_ranged": 0.5,
            "orders": [
                {"kind": "rotate_to", "bearing_deg": 0},
                {"kind": "translate_to", "to": [2250.0, 1500.0]},
                {"kind": "face_nearest_enemy"},
            ],
        },
    ]
    artillery = [
        {"id": 3, "side": "blue", "name": "Union artillery", "guns": 95,
         "position": [2480.0, 1500.0]},
        {"id": 4, "side": "red", "name": "Confederate artillery", "guns": 86,
         "position": [780.0, 1500.0], "k_ranged": 0.9},
    ]
    doc = {
        "name": "army",
        "terrain": "terrain.yaml",
        "dt": 1.0,
        "duration": 3600.0,
        "terrain_effects": True,
        "snapshot_interval": 60.0,
        "params": params,
        "units": units,
        "artillery": artillery,
    }
    (OUT / "gettysburg" / "army.yaml").write_text(
        yaml.safe_dump(doc, sort_keys=False), encoding="utf-8"
    )


def write_ensemble_spec() -> None:
    doc = {
        "cases": 1000,
        "position_sigma": 100.0,
        "bearing_sigma_deg": 10.0,
        "scale_band": [0.8, 1.2],
        "combat_band": [0.5, 2.0],
    }
    (OUT / "gettysburg" / "ensemble.yaml").write_text(
        yaml.safe_dump(doc, sort_keys=False), encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# Small fast scenario for CLI / integration tests
# ---------------------------------------------------------------------------


def write_duel() -> None:
    ddir = OUT / "duel"
    ddir.mkdir(parents=True, exist_ok=True)
    nx, ny, ds = 64, 48, 8.0
    elevation = [0.0] * (nx * ny)
    terrain = {
        "grid": {"nx": nx, "ny": ny, "ds": ds, "origin": [0.0, 0.0]},
        "base_speed": 1.0,
        "smoothing_passes": 3,
        "elevation": {"source": "inline", "values": elevation},
        "features": [
            {"name": "woods", "kind": "polygon", "value": 0.5,
             "vertices": [[40, 40], [140, 40], [140, 120], [40, 120]]},
            {"name": "barn", "kind": "point", "value": 0.05, "scale": 20.0,
             "vertices": [[256, 300]]},
        ],
    }
    (ddir / "terrain.yaml").write_text(yaml.safe_dump(terrain, sort_keys=False), encoding="utf-8")
    scenario = {
        "name": "duel",
        "terrain": "terrain.yaml",
        "dt": 1.0,
        "duration": 600.0,
        "terrain_effects": True,
        "snapshot_interval": 60.0,
        "params": {"fire_norm": 2000.0, "march_speed": 0.6},
        "units": [
            {"id": 1, "side": "red", "name": "red column", "morale": 1.0,
             "strength": 300,
             "formation": {"center": [120.0, 192.0], "width": 100.0,
                           "depth": 24.0, "bearing_deg": 0},
             "orders": [{"kind": "translate_to", "to": [300.0, 192.0]},
                        {"kind": "face_nearest_enemy"}]},
            {"id": 2, "side": "blue", "name": "blue line", "morale": 1.0,
             "strength": 300,
             "formation": {"center": [400.0, 192.0], "width": 100.0,
                           "depth": 24.0, "bearing_deg": 180},
             "orders": [{"kind": "face_nearest_enemy"}]},
        ],
        "artillery": [
            {"id": 3, "side": "blue", "name": "guns", "position": [460.0, 192.0],
             "guns": 2},
        ],
    }
    (ddir / "duel.yaml").write_text(yaml.safe_dump(scenario, sort_keys=False), encoding="utf-8")


def main() -> int:
    write_terrain()
    write_brigade()
    write_army()
    write_ensemble_spec()
    write_duel()
    print(f"wrote scenario files under {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
