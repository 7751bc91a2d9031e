"""Casualty-rate fields: close-in area fire plus aggregated ranged fire.

Close-in losses follow the area-fire law (rate proportional to the local
product of attacker and defender densities). Ranged fire is aggregated per
unit: each attacker picks the nearest enemy centroid inside a +/-45 degree
window of its bearing and applies a rate scaled by five efficiency factors
(range, off-bearing angle, relative orientation, fire elevation, attacker
motion); the loss is spread over the defender proportionally to its local
density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .units import UnitSummary


@dataclass
class CombatParams:
    """Fire-model constants shared by every unit pair."""

    k_close: float = 5.0e-2  # m^2/s
    alpha_window: float = np.pi / 4  # target selection half-angle (45 deg)
    alpha_r: float = np.pi / 2  # f2 reference angle
    theta_r: float = np.pi / 6  # f4 reference angle
    v_ref: float = 1.4  # f5 reference speed (m/s)
    fire_norm: float = 1.0  # divides every ranged coefficient
    closein_floor: float = 1e-4  # fraction of rho_max
    rho_max: float = 5.6


@dataclass
class TargetAssignment:
    """Resolved ranged-fire target for one attacker (or none)."""

    attacker_id: int
    defender_id: Optional[int]
    distance: float = np.inf
    angle_off: float = 0.0  # |alpha|, radians


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    return math.atan2(math.sin(a), math.cos(a))


def closein_rate(rho_i: np.ndarray, enemy_rho: np.ndarray, p: CombatParams) -> np.ndarray:
    """Close-in loss rate for the defender whose density is rho_i.

    ``enemy_rho`` is the summed density of all enemy flow units (artillery
    excluded). A linear taper removes combat where the defender density is
    essentially zero.
    """
    taper = np.clip(rho_i / (p.closein_floor * p.rho_max), 0.0, 1.0)
    return p.k_close * rho_i * taper * enemy_rho


def select_target(attacker: UnitSummary, candidates: list[UnitSummary],
                  window: float = np.pi / 4) -> TargetAssignment:
    """Nearest enemy centroid within the angular window about the bearing.

    Candidates must already be filtered to live enemy flow units. Ties on
    distance break toward the lowest unit id so runs are deterministic.
    """
    ax, ay = float(attacker.centroid[0]), float(attacker.centroid[1])
    bearing = attacker.bearing
    best: Optional[UnitSummary] = None
    best_key = (math.inf, math.inf)
    best_alpha = 0.0
    for c in candidates:
        dx = float(c.centroid[0]) - ax
        dy = float(c.centroid[1]) - ay
        dist = math.hypot(dx, dy)
        if dist < 1e-9:
            alpha = 0.0
        else:
            alpha = abs(wrap_angle(math.atan2(dy, dx) - bearing))
        if alpha > window + 1e-12:
            continue
        key = (dist, c.id)
        if key < best_key:
            best, best_key, best_alpha = c, key, alpha
    if best is None:
        return TargetAssignment(attacker.id, None)
    return TargetAssignment(attacker.id, best.id, best_key[0], best_alpha)


def ranged_factors(r: float, alpha: float, beta: float, theta_fire: float,
                   v: float, r0: float, p: CombatParams) -> tuple[float, float, float, float, float]:
    """The five ranged-fire efficiency factors.

    f1 range fall-off, f2 off-bearing accuracy, f3 relative orientation
    (enfilade bonus), f4 fire-elevation accuracy, f5 moving-attacker penalty.
    """
    f1 = 1.0 if r < r0 else (r0 / r) ** 2
    f2 = math.exp(-2.0 * alpha**2 / p.alpha_r**2)
    f3 = (3.0 + math.cos(beta)) / 2.0
    f4 = math.exp(-2.0 * theta_fire**2 / p.theta_r**2)
    f5 = math.exp(-50.0 * v / p.v_ref)
    return f1, f2, f3, f4, f5


def fire_elevation_angle(attacker_pos, attacker_h: float, defender_pos, defender_h: float) -> float:
    """Angle of fire above horizontal, from attacker toward defender."""
    dx = float(defender_pos[0]) - float(attacker_pos[0])
    dy = float(defender_pos[1]) - float(attacker_pos[1])
    horizontal = math.hypot(dx, dy)
    if horizontal < 1e-9:
        return 0.0
    return math.atan2(defender_h - attacker_h, horizontal)


def attack_coefficient(attacker: UnitSummary, defender: UnitSummary,
                       assignment: TargetAssignment, attacker_h: float,
                       defender_h: float, p: CombatParams) -> float:
    """Per-attacker ranged coefficient c = k' f1 f2 f3 f4 f5 / fire_norm.

    Multiplied by the attacker's current strength and the defender's local
    density this yields the loss-rate field. Immobile artillery keeps f5 = 1.
    """
    beta = abs(wrap_angle(defender.bearing - attacker.bearing))
    theta = fire_elevation_angle(attacker.centroid, attacker_h, defender.centroid, defender_h)
    v = 0.0 if attacker.is_artillery else attacker.mean_speed
    f1, f2, f3, f4, f5 = ranged_factors(
        assignment.distance, assignment.angle_off, beta, theta, v, attacker.r0, p
    )
    return attacker.k_ranged * f1 * f2 * f3 * f4 * f5 / p.fire_norm


def ranged_rate(rho_i: np.ndarray, total_coefficient: float) -> np.ndarray:
    """Ranged loss-rate field: local density times the summed attack terms.

    ``total_coefficient`` is sum over attackers of c_j * R_j, with R_j the
    attacker's current strength (gun count for batteries). Spreading the
    aggregate loss proportionally to rho_i is what distributes casualties
    across the defender's constituents.
    """
    if total_coefficient == 0.0:
        return np.zeros_like(rho_i)
    return rho_i * total_coefficient
