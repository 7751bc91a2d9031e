"""Per-unit continuum state, discrete artillery, and scenario assembly.

A flow unit carries a density raster (persons/m^2), a two-component identity
raster recording where each parcel started in the initial formation, a goal
transform, morale bookkeeping and an order list. Artillery batteries are
immobile discrete units with a fixed effective-density footprint; they fire
but never move, take losses, or join close-in combat.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kinematics import GoalTransform, KinematicsParams
from .terrain import Grid, TerrainMap

RED = "red"
BLUE = "blue"

ACTIVE = "active"
RETREATING = "retreating"
PRESSING = "pressing"

DESTROYED_THRESHOLD = 1.0  # persons; below this a unit is out of the fight
SUPPORT_FLOOR = 1e-12  # persons/m^2; cells below this are treated as empty


@dataclass
class FormationSpec:
    """Rotated-rectangle footprint for a unit's initial formation.

    ``bearing`` is the facing direction (radians, 0 = east, pi/2 = north);
    the formation width runs perpendicular to it, the depth along it.
    """

    center: tuple[float, float]
    width: float
    depth: float
    bearing: float
    strength: float

    def __post_init__(self):
        if self.width <= 0 or self.depth <= 0:
            raise ValueError("formation width and depth must be positive")
        if self.strength <= 0:
            raise ValueError("formation strength must be positive")

    @property
    def uniform_density(self) -> float:
        return self.strength / (self.width * self.depth)


@dataclass
class UnitDef:
    """Scenario-level seed for one flow unit (no rasters yet)."""

    id: int
    side: str
    name: str
    formation: FormationSpec
    morale0: float
    orders: list = field(default_factory=list)
    stretch: tuple[float, float] = (1.0, 1.0)
    march_speed: Optional[float] = None  # None -> scenario default
    k_ranged: Optional[float] = None
    r0: Optional[float] = None


@dataclass
class UnitState:
    """Runtime state of one flow unit."""

    id: int
    side: str
    name: str
    rho: np.ndarray
    xi_x: np.ndarray
    xi_y: np.ndarray
    bearing0: float
    goal: GoalTransform
    morale0: float
    initial_strength: float
    orders: list = field(default_factory=list)
    order_idx: int = 0
    morale: float = 0.0
    morale_increments: float = 0.0
    credited_retreats: set = field(default_factory=set)
    status: str = ACTIVE
    destroyed: bool = False
    march_speed: float = 0.6
    k_ranged: float = 8.0
    r0: float = 100.0
    # step-cached diagnostics
    strength: float = 0.0
    centroid: np.ndarray = field(default_factory=lambda: np.zeros(2))
    mean_speed: float = 0.0
    # casualty accumulators (persons)
    casualties_close: float = 0.0
    casualties_ranged: float = 0.0
    clamped_mass: float = 0.0
    box: Optional[tuple[int, int, int, int]] = None  # (j0, j1, i0, i1), half-open

    @property
    def bearing(self) -> float:
        return self.bearing0 + self.goal.theta

    @property
    def casualties(self) -> float:
        return self.casualties_close + self.casualties_ranged

    @property
    def fractional_losses(self) -> float:
        return 1.0 - self.strength / self.initial_strength


@dataclass
class ArtilleryUnit:
    """Immobile battery with an effective crowd-density footprint."""

    id: int
    side: str
    name: str
    position: tuple[float, float]
    guns: int
    k_ranged: float = 16.0
    r0: float = 1200.0
    peak_fraction: float = 0.1  # of rho_max
    footprint_scale: float = 20.0  # m
    bearing: float = 0.0

    def __post_init__(self):
        if self.guns < 1:
            raise ValueError("battery needs at least one gun")


@dataclass
class GlobalParams:
    """Scenario-wide model constants."""

    v_max: float = 1.4  # m/s
    rho_max: float = 5.6  # persons/m^2
    diffusion: float = 0.0  # m^2/s
    k_close: float = 5.0e-2  # m^2/s, close-in area-fire coefficient
    k_ranged_infantry: float = 8.0  # ranged-fire efficiency, per normalized attacker
    k_ranged_artillery: float = 16.0
    r0_infantry: float = 100.0  # m
    r0_artillery: float = 1200.0  # m
    alpha_r: float = np.pi / 2  # off-bearing reference angle (90 deg)
    theta_r: float = np.pi / 6  # fire-elevation reference angle (30 deg)
    v_ref: Optional[float] = None  # f5 reference speed; None -> v_max
    loss_ref: float = 0.35  # reference fractional losses for morale
    fire_norm: float = 1.0  # divides k_ranged; scenario files set the calibrated value
    closein_floor: float = 1e-4  # of rho_max; close-in taper threshold
    march_speed: float = 0.6  # m/s, ordered translation speed
    rotate_rate: float = 0.6 / 50.0  # rad/s, ordered rotation speed
    morale_bonus: float = 0.5  # increment for sighting a retreating enemy

    @property
    def v_ref_value(self) -> float:
        return self.v_max if self.v_ref is None else self.v_ref

    def kinematics(self) -> KinematicsParams:
        return KinematicsParams(self.v_max, self.rho_max, self.diffusion)


@dataclass
class Scenario:
    """Complete run description: map, units, parameters, duration."""

    name: str
    terrain: TerrainMap
    units: list[UnitDef]
    artillery: list[ArtilleryUnit]
    params: GlobalParams = field(default_factory=GlobalParams)
    dt: float = 1.0
    duration: float = 3600.0
    terrain_effects: bool = True
    snapshot_interval: float = 60.0

    def validate(self) -> None:
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        grid = self.terrain.grid
        cfl = self.dt * 2.0 * self.params.v_max / grid.ds
        if cfl >= 1.0:
            limit = grid.ds / (2.0 * self.params.v_max)
            raise ValueError(
                f"advection stability violated: dt={self.dt} s exceeds the "
                f"limit ds/(2 v_max) = {limit:.3f} s"
            )
        n = self.duration / self.dt
        if self.duration <= 0 or abs(n - round(n)) > 1e-9:
            raise ValueError("duration must be a positive multiple of dt")
        if not self.units:
            raise ValueError("scenario has no flow units")
        ids = [u.id for u in self.units] + [a.id for a in self.artillery]
        if len(set(ids)) != len(ids):
            raise ValueError("unit ids must be unique across flow units and artillery")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def side_strength(self, side: str) -> float:
        return sum(u.formation.strength for u in self.units if u.side == side)

    def side_guns(self, side: str) -> int:
        return sum(a.guns for a in self.artillery if a.side == side)


def formation_density(spec: FormationSpec, grid: Grid) -> np.ndarray:
    """Uniform rotated-rectangle fill, edge-smoothed over one cell.

    The raster is rescaled so its integral matches the spec strength; the
    smoothing ramp alone would lose the half-cell rim.
    """
    cb, sb = np.cos(spec.bearing), np.sin(spec.bearing)
    relx = grid.cell_x - spec.center[0]
    rely = grid.cell_y - spec.center[1]
    along = relx * cb + rely * sb  # depth axis
    across = -relx * sb + rely * cb  # width axis
    ramp_d = np.clip((spec.depth / 2 - np.abs(along)) / grid.ds + 0.5, 0.0, 1.0)
    ramp_w = np.clip((spec.width / 2 - np.abs(across)) / grid.ds + 0.5, 0.0, 1.0)
    rho = spec.uniform_density * ramp_d * ramp_w
    total = rho.sum() * grid.cell_area
    if total <= 0:
        raise ValueError("formation footprint does not intersect the map interior")
    rho *= spec.strength / total
    return rho


def init_unit(udef: UnitDef, grid: Grid, params: GlobalParams) -> UnitState:
    """Build runtime state from a unit seed.

    Rejects formations whose implied uniform density exceeds the packing
    limit rho_max. The identity rasters are the world coordinates of every
    cell (the whole map, not just the footprint).
    """
    spec = udef.formation
    if spec.uniform_density > params.rho_max:
        raise ValueError(
            f"unit {udef.id} ({udef.name}): implied density "
            f"{spec.uniform_density:.2f}/m^2 exceeds rho_max {params.rho_max}"
        )
    rho = formation_density(spec, grid)
    goal = GoalTransform(
        y1=np.array(spec.center, dtype=float),
        y2=np.array(spec.center, dtype=float),
        theta=0.0,
        a=udef.stretch[0],
        b=udef.stretch[1],
    )
    strength = float(rho.sum() * grid.cell_area)
    unit = UnitState(
        id=udef.id,
        side=udef.side,
        name=udef.name,
        rho=rho,
        xi_x=grid.cell_x.copy(),
        xi_y=grid.cell_y.copy(),
        bearing0=spec.bearing,
        goal=goal,
        morale0=udef.morale0,
        morale=udef.morale0,
        initial_strength=strength,
        orders=list(udef.orders),
        march_speed=params.march_speed if udef.march_speed is None else udef.march_speed,
        k_ranged=params.k_ranged_infantry if udef.k_ranged is None else udef.k_ranged,
        r0=params.r0_infantry if udef.r0 is None else udef.r0,
        strength=strength,
        centroid=np.array(spec.center, dtype=float),
    )
    unit.box = support_box(rho, grid)
    return unit


def support_box(rho: np.ndarray, grid: Grid, pad: int = 4,
                previous: Optional[tuple[int, int, int, int]] = None):
    """Padded bounding box of the cells that actually hold density.

    Restricting the search to the previous box keeps the scan cheap; support
    cannot outrun the pad in one step under the CFL limit.
    """
    if previous is not None:
        j0p, j1p, i0p, i1p = previous
        sub = rho[j0p:j1p, i0p:i1p]
        rows = np.flatnonzero(sub.max(axis=1) > SUPPORT_FLOOR)
        cols = np.flatnonzero(sub.max(axis=0) > SUPPORT_FLOOR)
        if rows.size == 0:
            return None
        j0, j1 = j0p + rows[0], j0p + rows[-1] + 1
        i0, i1 = i0p + cols[0], i0p + cols[-1] + 1
    else:
        rows = np.flatnonzero(rho.max(axis=1) > SUPPORT_FLOOR)
        cols = np.flatnonzero(rho.max(axis=0) > SUPPORT_FLOOR)
        if rows.size == 0:
            return None
        j0, j1 = rows[0], rows[-1] + 1
        i0, i1 = cols[0], cols[-1] + 1
    return (
        max(0, j0 - pad),
        min(grid.ny, j1 + pad),
        max(0, i0 - pad),
        min(grid.nx, i1 + pad),
    )


@dataclass
class UnitSummary:
    """Aggregate view of a unit used by targeting, morale and f5."""

    id: int
    side: str
    strength: float
    centroid: np.ndarray
    mean_speed: float
    bearing: float
    status: str
    destroyed: bool
    is_artillery: bool = False
    k_ranged: float = 0.0
    r0: float = 0.0


def unit_summary(unit: UnitState, grid: Grid) -> UnitSummary:
    """Strength, density-weighted centroid and mean speed for one unit."""
    if unit.box is None:
        strength = 0.0
    else:
        j0, j1, i0, i1 = unit.box
        strength = float(unit.rho[j0:j1, i0:i1].sum() * grid.cell_area)
    destroyed = strength < DESTROYED_THRESHOLD
    if not destroyed:
        j0, j1, i0, i1 = unit.box
        sub = unit.rho[j0:j1, i0:i1]
        mass = sub.sum()
        cx = float((sub * grid.cell_x[j0:j1, i0:i1]).sum() / mass)
        cy = float((sub * grid.cell_y[j0:j1, i0:i1]).sum() / mass)
        unit.centroid = np.array([cx, cy])
    unit.strength = strength
    unit.destroyed = unit.destroyed or destroyed
    return UnitSummary(
        id=unit.id,
        side=unit.side,
        strength=strength,
        centroid=unit.centroid.copy(),
        mean_speed=unit.mean_speed,
        bearing=unit.bearing,
        status=unit.status,
        destroyed=unit.destroyed,
        k_ranged=unit.k_ranged,
        r0=unit.r0,
    )


def artillery_summary(a: ArtilleryUnit) -> UnitSummary:
    return UnitSummary(
        id=a.id,
        side=a.side,
        strength=float(a.guns),
        centroid=np.array(a.position, dtype=float),
        mean_speed=0.0,
        bearing=a.bearing,
        status=ACTIVE,
        destroyed=False,
        is_artillery=True,
        k_ranged=a.k_ranged,
        r0=a.r0,
    )


def artillery_density(a: ArtilleryUnit, grid: Grid, rho_max: float = 5.6) -> np.ndarray:
    """Static Gaussian obstacle footprint: exp(-(r/scale)^2) times the peak."""
    r2 = (grid.cell_x - a.position[0]) ** 2 + (grid.cell_y - a.position[1]) ** 2
    return a.peak_fraction * rho_max * np.exp(-r2 / a.footprint_scale**2)


def total_artillery_density(batteries: list[ArtilleryUnit], grid: Grid, rho_max: float) -> np.ndarray:
    total = grid.zeros()
    for a in batteries:
        total += artillery_density(a, grid, rho_max)
    return total
