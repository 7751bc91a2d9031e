"""Order lists, morale, and the retreat / press-attack breakpoints.

Runs entirely in the serial phase between field updates: it reads the unit
summaries computed at the start of the step and mutates only command state
(goal transforms, order pointers, morale, status). Translation orders march
the goal center at the ordered speed with a smooth taper near arrival;
rotation orders advance the goal angle the same way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.special import erf as _erf

from .combat import select_target, wrap_angle
from .units import (
    ACTIVE,
    BLUE,
    PRESSING,
    RED,
    RETREATING,
    GlobalParams,
    UnitState,
    UnitSummary,
)

TRANSLATE_TAPER = 10.0  # m, deceleration onset for ordered translation
ROTATE_TAPER = math.radians(10.0)  # rad, deceleration onset for ordered rotation
TRANSLATE_DONE = 0.5  # m
ROTATE_DONE = math.radians(0.5)


@dataclass
class WaitUntilEnemyWithin:
    range: float


@dataclass
class RotateTo:
    bearing: float  # rad, absolute facing


@dataclass
class TranslateTo:
    point: tuple[float, float]


@dataclass
class FaceNearestEnemy:
    pass


@dataclass
class Flank:
    """Combined translation and rotation executed as one segment."""

    point: tuple[float, float]
    bearing: float


Order = Union[WaitUntilEnemyWithin, RotateTo, TranslateTo, FaceNearestEnemy, Flank]


@dataclass
class MoraleState:
    morale: float
    morale0: float
    fractional_losses: float
    increments: float


def _march_goal_center(goal, target: np.ndarray, speed: float, dt: float) -> float:
    """Move y2 toward target at the ordered speed with the arrival taper.

    Returns the remaining distance after the move.
    """
    delta = target - goal.y2
    dist = float(np.hypot(delta[0], delta[1]))
    if dist < 1e-12:
        return 0.0
    step = speed * float(_erf(dist / TRANSLATE_TAPER)) * dt
    if step >= dist:
        goal.y2 = target.copy()
        return 0.0
    goal.y2 = goal.y2 + delta * (step / dist)
    return dist - step


def _rotate_goal(goal, theta_target: float, rate: float, dt: float) -> float:
    """Advance theta toward the target angle; returns remaining |error|."""
    err = wrap_angle(theta_target - goal.theta)
    if abs(err) < 1e-12:
        return 0.0
    step = rate * float(_erf(abs(err) / ROTATE_TAPER)) * dt
    if step >= abs(err):
        goal.theta += err
        return 0.0
    goal.theta += math.copysign(step, err)
    return abs(err) - step


def _nearest_enemy(summary: UnitSummary, enemies: list[UnitSummary]) -> Optional[UnitSummary]:
    cx, cy = float(summary.centroid[0]), float(summary.centroid[1])
    best, best_key = None, (math.inf, math.inf)
    for e in enemies:
        if e.destroyed or e.is_artillery:
            continue
        d = math.hypot(float(e.centroid[0]) - cx, float(e.centroid[1]) - cy)
        if (d, e.id) < best_key:
            best, best_key = e, (d, e.id)
    return best


def advance_orders(unit: UnitState, summary: UnitSummary,
                   enemies: list[UnitSummary], dt: float, params: GlobalParams) -> None:
    """Execute the unit's current order for one time step.

    Orders run strictly in sequence; one completes when its taper criterion
    is met (goal center within 0.5 m, or goal angle within 0.5 degrees).
    An exhausted order list leaves the unit holding its position and facing.
    """
    if unit.order_idx >= len(unit.orders):
        return
    order = unit.orders[unit.order_idx]

    if isinstance(order, WaitUntilEnemyWithin):
        cx, cy = float(summary.centroid[0]), float(summary.centroid[1])
        for e in enemies:
            if e.destroyed or e.is_artillery:
                continue
            if math.hypot(float(e.centroid[0]) - cx, float(e.centroid[1]) - cy) <= order.range:
                unit.order_idx += 1
                return
        return

    if isinstance(order, TranslateTo):
        remaining = _march_goal_center(unit.goal, np.asarray(order.point, float),
                                       unit.march_speed, dt)
        if remaining < TRANSLATE_DONE:
            unit.order_idx += 1
        return

    if isinstance(order, RotateTo):
        remaining = _rotate_goal(unit.goal, order.bearing - unit.bearing0,
                                 params.rotate_rate, dt)
        if remaining < ROTATE_DONE:
            unit.order_idx += 1
        return

    if isinstance(order, FaceNearestEnemy):
        enemy = _nearest_enemy(summary, enemies)
        if enemy is None:
            unit.order_idx += 1
            return
        delta = enemy.centroid - summary.centroid
        bearing_target = math.atan2(delta[1], delta[0])
        remaining = _rotate_goal(unit.goal, bearing_target - unit.bearing0,
                                 params.rotate_rate, dt)
        if remaining < ROTATE_DONE:
            unit.order_idx += 1
        return

    if isinstance(order, Flank):
        rem_t = _march_goal_center(unit.goal, np.asarray(order.point, float),
                                   unit.march_speed, dt)
        rem_r = _rotate_goal(unit.goal, order.bearing - unit.bearing0,
                             params.rotate_rate, dt)
        if rem_t < TRANSLATE_DONE and rem_r < ROTATE_DONE:
            unit.order_idx += 1
        return

    raise TypeError(f"unknown order type {type(order).__name__}")


def update_morale(unit: UnitState, summary: UnitSummary,
                  summaries_by_id: dict[int, UnitSummary],
                  enemies: list[UnitSummary], params: GlobalParams) -> MoraleState:
    """Recompute morale and apply the breakpoint checks for one unit.

    The nearest enemy inside the +/-45 degree sector is the "visible" enemy.
    Sighting it in retreat grants a one-time +0.5 increment per enemy unit.
    A red unit with positive morale pursues a visible retreating blue unit;
    negative morale sends any unit back toward its initial position.
    """
    losses = unit.fractional_losses
    live = [e for e in enemies if not e.destroyed and not e.is_artillery]
    visible = select_target(summary, live)
    if visible.defender_id is not None:
        seen = summaries_by_id[visible.defender_id]
        if seen.status == RETREATING and seen.id not in unit.credited_retreats:
            unit.credited_retreats.add(seen.id)
            unit.morale_increments += params.morale_bonus
    unit.morale = unit.morale0 - losses / params.loss_ref + unit.morale_increments

    if unit.morale < 0.0:
        if unit.status != RETREATING:
            unit.status = RETREATING
    elif (
        unit.side == RED
        and visible.defender_id is not None
        and summaries_by_id[visible.defender_id].status == RETREATING
        and summaries_by_id[visible.defender_id].side == BLUE
    ):
        unit.status = PRESSING
    elif unit.status == PRESSING:
        unit.status = ACTIVE  # pursuit target rallied, died, or left the sector

    return MoraleState(unit.morale, unit.morale0, losses, unit.morale_increments)


def apply_status_goals(unit: UnitState, summary: UnitSummary,
                       summaries_by_id: dict[int, UnitSummary],
                       enemies: list[UnitSummary], dt: float, params: GlobalParams) -> None:
    """Move the goal transform for retreating or pressing units.

    Retreat marches the goal center back to the initial position and undoes
    the formation rotation; pursuit marches it onto the (refreshed) centroid
    of the nearest visible retreating enemy.
    """
    if unit.status == RETREATING:
        _march_goal_center(unit.goal, unit.goal.y1, unit.march_speed, dt)
        _rotate_goal(unit.goal, 0.0, params.rotate_rate, dt)
        return
    if unit.status == PRESSING:
        live = [e for e in enemies
                if not e.destroyed and not e.is_artillery and e.status == RETREATING]
        target = _nearest_enemy(summary, live)
        if target is None:
            return
        _march_goal_center(unit.goal, target.centroid, unit.march_speed, dt)
        delta = target.centroid - summary.centroid
        if np.hypot(delta[0], delta[1]) > 1e-9:
            _rotate_goal(unit.goal, math.atan2(delta[1], delta[0]) - unit.bearing0,
                         params.rotate_rate, dt)


def standard_order_lists(side: str, start: tuple[float, float],
                         waypoints: list[tuple[float, float]],
                         wait_range: float = 500.0,
                         flank_to: Optional[tuple[float, float]] = None,
                         flank_bearing: Optional[float] = None) -> list[Order]:
    """Doctrine order lists for the two sides.

    Red: rotate to the march bearing, translate through the waypoints, then
    face the nearest enemy. Blue: wait for an enemy within ``wait_range``,
    then the same rotate/translate/face sequence. Passing a flank target
    instead yields the combined translate+rotate flanking segment.
    """
    if flank_to is not None:
        if flank_bearing is None:
            raise ValueError("flanking orders need a bearing")
        orders: list[Order] = []
        if side == BLUE:
            orders.append(WaitUntilEnemyWithin(wait_range))
        orders.append(Flank(tuple(flank_to), flank_bearing))
        orders.append(FaceNearestEnemy())
        return orders
    if not waypoints:
        return [FaceNearestEnemy()]
    orders = []
    if side == BLUE:
        orders.append(WaitUntilEnemyWithin(wait_range))
    march = math.atan2(waypoints[0][1] - start[1], waypoints[0][0] - start[0])
    orders.append(RotateTo(march))
    for wp in waypoints:
        orders.append(TranslateTo(tuple(wp)))
    orders.append(FaceNearestEnemy())
    return orders
