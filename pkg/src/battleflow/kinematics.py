"""Directed-velocity law for flow units.

Each unit cell walks toward the goal slot assigned to its (advected)
identity coordinate. The walking speed is the product of a maximum speed
and four factors: crowd density, ground slope in the walking direction,
distance to the goal slot, and the terrain overlay multiplier. The total
velocity adds an optional density-diffusion drift (off in the shipped
configuration).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf


@dataclass
class KinematicsParams:
    """Walking-law constants.

    ``near_goal_cells`` sets where the arrival taper engages,
    ``double_time_onset_cells`` where stragglers switch to double time and
    ``double_time_ramp_cells`` how wide that switch is; all three are in
    grid-cell units.
    """

    v_max: float = 1.4
    rho_max: float = 5.6
    diffusion: float = 0.0
    near_goal_cells: float = 1.5
    double_time_onset_cells: float = 40.0
    double_time_ramp_cells: float = 10.0

    def __post_init__(self):
        if self.v_max <= 0 or self.rho_max <= 0 or self.diffusion < 0:
            raise ValueError("v_max and rho_max must be positive, diffusion >= 0")


@dataclass
class GoalTransform:
    """Maps identity coordinates to current goal slots.

    A cell whose identity is xi targets ``z = A (xi - y1) + y2`` where A
    rotates by theta and stretches by (a, b). y1 is the formation's initial
    center; the command layer moves y2 and theta over time.
    """

    y1: np.ndarray
    y2: np.ndarray
    theta: float = 0.0
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        self.y1 = np.asarray(self.y1, dtype=float)
        self.y2 = np.asarray(self.y2, dtype=float)
        if self.a <= 0 or self.b <= 0:
            raise ValueError("stretch factors must be positive")

    def matrix(self) -> np.ndarray:
        c, s = np.cos(self.theta), np.sin(self.theta)
        return np.array([[self.a * c, -self.b * s], [self.a * s, self.b * c]])

    def copy(self) -> "GoalTransform":
        return GoalTransform(self.y1.copy(), self.y2.copy(), self.theta, self.a, self.b)


def density_factor(rho_total, rho_max: float):
    """Crowd slowdown: quintic from 1 at zero density to 0 at rho_max."""
    q = np.clip(np.asarray(rho_total, dtype=float) / rho_max, 0.0, 1.0)
    return ((-6.0 * q + 15.0) * q - 10.0) * q ** 3 + 1.0


def slope_factor(s):
    """Uphill slowdown 1/(1 + 3.5 s); downhill walking is unaffected."""
    s = np.asarray(s, dtype=float)
    return np.where(s > 0.0, 1.0 / (1.0 + 3.5 * np.maximum(s, 0.0)), 1.0)


def goal_proximity_factor(r, ds: float, params: KinematicsParams | None = None):
    """Speed factor vs distance to goal slot: 0 at arrival, 2 at double time."""
    p = params or KinematicsParams()
    r = np.asarray(r, dtype=float)
    near = erf(r / (p.near_goal_cells * ds))
    far = 0.5 * (1.0 + erf((r - p.double_time_onset_cells * ds) / (p.double_time_ramp_cells * ds)))
    return near + far


def goal_position(xi, g: GoalTransform):
    """Goal slot for identity coordinate(s) xi; xi has shape (..., 2)."""
    xi = np.asarray(xi, dtype=float)
    rel = xi - g.y1
    return rel @ g.matrix().T + g.y2


def walking_direction(x, z):
    """Unit vector from x toward z; zero vector when they coincide."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    delta = z - x
    dist = np.linalg.norm(delta, axis=-1, keepdims=True)
    safe = np.where(dist < 1e-9, 1.0, dist)
    return np.where(dist < 1e-9, 0.0, delta / safe)


def velocity_arrays(
    xi_x,
    xi_y,
    cell_x,
    cell_y,
    rho_total,
    rho_self,
    overlay,
    grad_hx,
    grad_hy,
    goal: GoalTransform,
    params: KinematicsParams,
    ds: float,
    terrain_effects: bool = True,
):
    """Directed and total velocity components over matching rasters.

    All array arguments share one shape (any slab or box of the map).
    Returns (Vx, Vy, ux, uy); with zero diffusion the total velocity aliases
    the directed one.
    """
    m = goal.matrix()
    relx = xi_x - goal.y1[0]
    rely = xi_y - goal.y1[1]
    dx = m[0, 0] * relx + m[0, 1] * rely + goal.y2[0] - cell_x
    dy = m[1, 0] * relx + m[1, 1] * rely + goal.y2[1] - cell_y
    r = np.hypot(dx, dy)
    inv = np.where(r < 1e-9, 0.0, 1.0 / np.where(r < 1e-9, 1.0, r))

    speed = params.v_max * goal_proximity_factor(r, ds, params)
    speed *= density_factor(rho_total, params.rho_max)
    if terrain_effects:
        # slope in the walking direction; uphill divides, downhill is free
        s = (grad_hx * dx + grad_hy * dy) * inv
        speed *= np.where(s > 0.0, 1.0 / (1.0 + 3.5 * np.maximum(s, 0.0)), 1.0)
        speed *= overlay

    vx = speed * dx * inv
    vy = speed * dy * inv
    if params.diffusion == 0.0:
        return vx, vy, vx, vy

    gy, gx = np.gradient(rho_self, ds, edge_order=1)
    denom = np.maximum(rho_self, 1e-12)
    ux = vx - params.diffusion * gx / denom
    uy = vy - params.diffusion * gy / denom
    return vx, vy, ux, uy


def velocity_field(unit, rho_total, terrain, goal, params, terrain_effects=True, taper=None):
    """Full-map velocity field for one unit (thin wrapper over the array core).

    ``taper`` is an optional (tx, ty) pair of per-axis boundary ramps; the
    solver passes the precomputed ones so the normal component dies at the
    map border.
    """
    g = terrain.grid
    gx, gy = terrain.elevation_gradient
    vx, vy, ux, uy = velocity_arrays(
        unit.xi_x,
        unit.xi_y,
        g.cell_x,
        g.cell_y,
        rho_total,
        unit.rho,
        terrain.overlay,
        gx,
        gy,
        goal,
        params,
        g.ds,
        terrain_effects,
    )
    if taper is not None:
        tx, ty = taper
        vx *= tx[None, :]
        vy *= ty[:, None]
        if ux is not vx:
            ux *= tx[None, :]
            uy *= ty[:, None]
    return vx, vy, ux, uy
