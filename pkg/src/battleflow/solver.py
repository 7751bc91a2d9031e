"""Time integration of the coupled density / identity / combat system.

Each step alternates a serial command phase (summaries, morale, orders,
target selection) with a data-parallel field phase: two-stage Runge-Kutta
(midpoint) over every unit's density and identity rasters, with combat
sinks evaluated per stage. Spatial derivatives use second-order upwind
reconstruction with the harmonic-mean slope limiter; the density equation
is advanced in conservative flux form with the directed velocity, the
identity equation in advective form with the total velocity.

For speed, all per-unit work is restricted to a padded bounding box of the
cells that actually hold density; under the CFL limit support cannot outrun
the pad within a step. The map is additionally split into row slabs
("tiles"): every slab update is a pure function of the frozen stage inputs
plus a halo, so results at a fixed tile count are bit-reproducible.
"""

from __future__ import annotations

import math
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import combat as combat_mod
from . import command as command_mod
from .kinematics import velocity_arrays
from .terrain import Grid, TerrainMap
from .units import (
    ACTIVE,
    BLUE,
    RED,
    RETREATING,
    Scenario,
    UnitState,
    artillery_summary,
    init_unit,
    support_box,
    total_artillery_density,
    unit_summary,
)

_STENCIL_PAD = 2  # ghost cells needed by the limited reconstruction


class CFLViolation(RuntimeError):
    pass


def _harmonic_slope(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Limited slope from adjacent differences: 2ab/(a+b) where ab > 0."""
    prod = a * b
    denom = a + b
    safe = np.where(denom == 0.0, 1.0, denom)
    return np.where(prod > 0.0, 2.0 * prod / safe, 0.0)


def _padded_window(arr: np.ndarray, box, pad: int = _STENCIL_PAD) -> np.ndarray:
    """arr over the box plus ``pad`` ghost cells, edge-replicated off-map.

    Returns a view whenever the padded window lies inside the map.
    """
    j0, j1, i0, i1 = box
    J0, J1 = j0 - pad, j1 + pad
    I0, I1 = i0 - pad, i1 + pad
    cj0, cj1 = max(J0, 0), min(J1, arr.shape[0])
    ci0, ci1 = max(I0, 0), min(I1, arr.shape[1])
    core = arr[cj0:cj1, ci0:ci1]
    if (cj0, cj1, ci0, ci1) == (J0, J1, I0, I1):
        return core
    return np.pad(core, ((cj0 - J0, J1 - cj1), (ci0 - I0, I1 - ci1)), mode="edge")


def _flux_divergence(f: np.ndarray, vx: np.ndarray, vy: np.ndarray, ds: float) -> np.ndarray:
    """div(f v) via upwind-limited face reconstruction.

    All inputs share a shape with two ghost cells per side; the result
    covers the interior (two cells smaller in each direction).
    """
    # x-direction
    d = f[:, 1:] - f[:, :-1]
    slope = _harmonic_slope(d[:, :-1], d[:, 1:])  # slope at cells 1..I-2
    vf = 0.5 * (vx[:, 1:-2] + vx[:, 2:-1])
    f_left = f[:, 1:-2] + 0.5 * slope[:, :-1]
    f_right = f[:, 2:-1] - 0.5 * slope[:, 1:]
    flux = np.where(vf > 0.0, f_left, f_right) * vf
    div = (flux[:, 1:] - flux[:, :-1])[2:-2, :] / ds
    # y-direction
    d = f[1:, :] - f[:-1, :]
    slope = _harmonic_slope(d[:-1, :], d[1:, :])
    vf = 0.5 * (vy[1:-2, :] + vy[2:-1, :])
    f_left = f[1:-2, :] + 0.5 * slope[:-1, :]
    f_right = f[2:-1, :] - 0.5 * slope[1:, :]
    flux = np.where(vf > 0.0, f_left, f_right) * vf
    div += (flux[1:, :] - flux[:-1, :])[:, 2:-2] / ds
    return div


def _advective_derivative(f: np.ndarray, ux: np.ndarray, uy: np.ndarray, ds: float) -> np.ndarray:
    """u . grad(f) with upwind-limited one-sided differences (same shapes)."""
    d = f[:, 1:] - f[:, :-1]
    slope = _harmonic_slope(d[:, :-1], d[:, 1:])
    fwd = (f[:, 2:-2] - f[:, 1:-3]) + 0.5 * (slope[:, 1:-1] - slope[:, :-2])
    bwd = (f[:, 3:-1] - f[:, 2:-2]) - 0.5 * (slope[:, 2:] - slope[:, 1:-1])
    ux_c = ux[2:-2, 2:-2]
    out = ux_c * np.where(ux_c > 0.0, fwd[2:-2, :], bwd[2:-2, :]) / ds

    d = f[1:, :] - f[:-1, :]
    slope = _harmonic_slope(d[:-1, :], d[1:, :])
    fwd = (f[2:-2, :] - f[1:-3, :]) + 0.5 * (slope[1:-1, :] - slope[:-2, :])
    bwd = (f[3:-1, :] - f[2:-2, :]) - 0.5 * (slope[2:, :] - slope[1:-1, :])
    uy_c = uy[2:-2, 2:-2]
    out += uy_c * np.where(uy_c > 0.0, fwd[:, 2:-2], bwd[:, 2:-2]) / ds
    return out


def _check_cfl(vx: np.ndarray, vy: np.ndarray, dt: float, ds: float, context: str) -> None:
    vmax = max(float(np.abs(vx).max(initial=0.0)), float(np.abs(vy).max(initial=0.0)))
    if vmax * dt / ds >= 1.0:
        idx = np.unravel_index(int(np.argmax(np.abs(vx) + np.abs(vy))), vx.shape)
        raise CFLViolation(
            f"CFL violated ({context}): max speed {vmax:.3f} m/s, dt {dt} s, "
            f"ds {ds} m at local cell {idx}"
        )


def advect(f: np.ndarray, velocity, dt: float, ds: float, conservative: bool = True) -> np.ndarray:
    """Single explicit advection update of a full raster.

    ``velocity`` is an (vx, vy) pair matching the raster shape. Conservative
    form divides fluxes (density transport); the advective form applies the
    one-sided derivative (identity transport). Aborts on a CFL violation.
    """
    vx, vy = velocity
    _check_cfl(vx, vy, dt, ds, "advect")
    fp = np.pad(f, _STENCIL_PAD, mode="edge")
    vxp = np.pad(vx, _STENCIL_PAD, mode="edge")
    vyp = np.pad(vy, _STENCIL_PAD, mode="edge")
    if conservative:
        return f - dt * _flux_divergence(fp, vxp, vyp, ds)
    return f - dt * _advective_derivative(fp, vxp, vyp, ds)


def taper_ramps(grid: Grid, width_fraction: float = 0.02) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis boundary ramps: 0 on the border ring, 1 past the taper band.

    The band width is a fraction of the map dimension along each axis; the
    ramp is a smoothstep in the cell distance from the nearest border.
    """

    def ramp(n: int, length: float) -> np.ndarray:
        width = width_fraction * length
        dist = np.minimum(np.arange(n), np.arange(n)[::-1]) * grid.ds
        u = np.clip(dist / width, 0.0, 1.0)
        return u * u * (3.0 - 2.0 * u)

    lx, ly = grid.extent
    return ramp(grid.nx, lx), ramp(grid.ny, ly)


def boundary_taper(vx: np.ndarray, vy: np.ndarray, grid: Grid):
    """Taper the border-normal velocity components to zero (public form)."""
    tx, ty = taper_ramps(grid)
    return vx * tx[None, :], vy * ty[:, None]


@dataclass
class RunResult:
    """Time histories and final summary of one simulation."""

    scenario_name: str
    times: np.ndarray
    unit_ids: list[int]
    unit_names: list[str]
    unit_sides: list[str]
    initial_strengths: np.ndarray
    strengths: np.ndarray  # (n_times, n_units)
    casualties_close: np.ndarray
    casualties_ranged: np.ndarray
    statuses: list[list[str]]  # per time, per unit
    clamped_mass: np.ndarray  # per unit, final accumulated
    wall_seconds: float = 0.0
    run_dir: Optional[str] = None

    @property
    def casualties(self) -> np.ndarray:
        return self.casualties_close + self.casualties_ranged

    def side_index(self, side: str) -> np.ndarray:
        return np.array([s == side for s in self.unit_sides])

    def side_casualties(self, side: str) -> float:
        return float(self.casualties[-1, self.side_index(side)].sum())

    def side_initial(self, side: str) -> float:
        return float(self.initial_strengths[self.side_index(side)].sum())

    def side_final(self, side: str) -> float:
        return float(self.strengths[-1, self.side_index(side)].sum())

    def retreating_strength(self, side: str) -> float:
        mask = self.side_index(side)
        final_status = self.statuses[-1]
        total = 0.0
        for k in range(len(self.unit_ids)):
            if mask[k] and final_status[k] == RETREATING:
                total += float(self.strengths[-1, k])
        return total

    def retreat_fraction_of_survivors(self, side: str = RED) -> float:
        survivors = self.side_final(side)
        if survivors <= 0.0:
            return 1.0
        return self.retreating_strength(side) / survivors

    def retreat_fraction_of_initial(self, side: str = RED) -> float:
        initial = self.side_initial(side)
        return self.retreating_strength(side) / initial if initial > 0 else 0.0


@dataclass
class _AttackTerm:
    attacker: object  # UnitState or ArtilleryUnit summary source
    coefficient: float
    is_artillery: bool


class Simulation:
    """Owns the mutable state of one run and advances it step by step."""

    def __init__(self, scenario: Scenario, tiles: int = 1):
        scenario.validate()
        self.scenario = scenario
        self.grid: Grid = scenario.terrain.grid
        self.terrain: TerrainMap = scenario.terrain
        self.params = scenario.params
        self.kin = scenario.params.kinematics()
        self.tiles = max(1, int(tiles))
        self.units: list[UnitState] = [
            init_unit(u, self.grid, scenario.params) for u in scenario.units
        ]
        self.artillery = list(scenario.artillery)
        self._point_artillery_at_enemy()
        self.artillery_density = total_artillery_density(
            self.artillery, self.grid, scenario.params.rho_max
        )
        self.time = 0.0
        self.step_index = 0
        self.taper = taper_ramps(self.grid)
        if not scenario.terrain_effects:
            gx, gy = self.grid.zeros(), self.grid.zeros()
            self._grad_h = (gx, gy)
            self._overlay = np.ones(self.grid.shape)
        else:
            self._grad_h = self.terrain.elevation_gradient
            self._overlay = self.terrain.overlay
        # reusable full-map buffers
        self._total_rho = self.grid.zeros()
        self._side_rho = {RED: self.grid.zeros(), BLUE: self.grid.zeros()}
        self._pool = ThreadPoolExecutor(max_workers=self.tiles) if self.tiles > 1 else None
        self._attack_terms: dict[int, list] = {}
        self.cp = self._combat_params()

    # -- setup ---------------------------------------------------------

    def _point_artillery_at_enemy(self) -> None:
        """Fix each battery's bearing toward the enemy infantry line centroid."""
        centers: dict[str, np.ndarray] = {}
        for side in (RED, BLUE):
            pts = [u.goal.y1 for u in self.units if u.side == side]
            centers[side] = np.mean(pts, axis=0) if pts else np.zeros(2)
        for a in self.artillery:
            enemy = centers[BLUE if a.side == RED else RED]
            delta = enemy - np.asarray(a.position, dtype=float)
            if np.hypot(*delta) > 1e-9:
                a.bearing = math.atan2(delta[1], delta[0])

    # -- serial phase ---------------------------------------------------

    def _serial_phase(self) -> None:
        summaries = {u.id: unit_summary(u, self.grid) for u in self.units}
        art_summaries = {a.id: artillery_summary(a) for a in self.artillery}
        flow_by_side = {
            RED: [s for s in summaries.values() if s.side == RED],
            BLUE: [s for s in summaries.values() if s.side == BLUE],
        }

        for u in self.units:
            if u.destroyed:
                continue
            enemies = flow_by_side[BLUE if u.side == RED else RED]
            command_mod.update_morale(u, summaries[u.id], summaries, enemies, self.params)
            if u.status == ACTIVE:
                command_mod.advance_orders(u, summaries[u.id], enemies, self.scenario.dt, self.params)
            else:
                command_mod.apply_status_goals(
                    u, summaries[u.id], summaries, enemies, self.scenario.dt, self.params
                )

        # ranged-fire target selection; retreating units do not fire
        self._attack_terms = {u.id: [] for u in self.units}
        cp = self.cp
        attackers = []
        for u in self.units:
            if not u.destroyed and u.status != RETREATING:
                attackers.append(summaries[u.id])
        attackers.extend(art_summaries.values())
        for att in attackers:
            candidates = [
                s for s in summaries.values()
                if s.side != att.side and not s.destroyed
            ]
            assignment = combat_mod.select_target(att, candidates, cp.alpha_window)
            if assignment.defender_id is None:
                continue
            defender = summaries[assignment.defender_id]
            coeff = combat_mod.attack_coefficient(
                att,
                defender,
                assignment,
                self.terrain.elevation_at(*att.centroid),
                self.terrain.elevation_at(*defender.centroid),
                cp,
            )
            self._attack_terms[defender.id].append((att, coeff))

    def _combat_params(self) -> combat_mod.CombatParams:
        p = self.params
        return combat_mod.CombatParams(
            k_close=p.k_close,
            alpha_r=p.alpha_r,
            theta_r=p.theta_r,
            v_ref=p.v_ref_value,
            fire_norm=p.fire_norm,
            closein_floor=p.closein_floor,
            rho_max=p.rho_max,
        )

    # -- field phase ----------------------------------------------------

    def _build_stage_fields(self, stage_rho: dict[int, np.ndarray]) -> None:
        """Total and per-side density rasters for the current stage."""
        np.copyto(self._total_rho, self.artillery_density)
        for side_arr in self._side_rho.values():
            side_arr.fill(0.0)
        for u in self.units:
            if u.id not in stage_rho:
                continue
            j0, j1, i0, i1 = u.box
            rho = stage_rho[u.id]
            np.maximum(rho, 0.0, out=rho)
            self._total_rho[j0:j1, i0:i1] += rho
            self._side_rho[u.side][j0:j1, i0:i1] += rho

    def _stage_strengths(self, stage_rho: dict[int, np.ndarray]) -> dict[int, float]:
        area = self.grid.cell_area
        return {uid: float(rho.sum() * area) for uid, rho in stage_rho.items()}

    def _unit_rhs(self, u: UnitState, rho_box: np.ndarray, xi_x_pad: np.ndarray,
                  xi_y_pad: np.ndarray, rho_pad: np.ndarray,
                  strengths: dict[int, float]):
        """Advection plus combat RHS for one unit's box, returning the
        density RHS, the two identity RHS components, the combat-rate fields
        and the mean speed diagnostic."""
        j0, j1, i0, i1 = u.box
        box = u.box
        g = self.grid
        cell_x = _padded_window(g.cell_x, box)
        cell_y = _padded_window(g.cell_y, box)
        rho_tot = _padded_window(self._total_rho, box)
        overlay = _padded_window(self._overlay, box)
        ghx = _padded_window(self._grad_h[0], box)
        ghy = _padded_window(self._grad_h[1], box)

        def slab_eval(rows):
            a, b = rows
            sl = slice(a, b)
            vx, vy, ux, uy = velocity_arrays(
                xi_x_pad[sl], xi_y_pad[sl], cell_x[sl], cell_y[sl],
                rho_tot[sl], rho_pad[sl], overlay[sl], ghx[sl], ghy[sl],
                u.goal, self.kin, g.ds, True,
            )
            tx = self.taper[0][np.clip(np.arange(i0 - 2, i1 + 2), 0, g.nx - 1)]
            ty = self.taper[1][np.clip(np.arange(j0 - 2 + a, j0 - 2 + b), 0, g.ny - 1)]
            vx *= tx[None, :]
            vy *= ty[:, None]
            if ux is not vx:
                ux *= tx[None, :]
                uy *= ty[:, None]
            return vx, vy, ux, uy

        pad_rows = xi_x_pad.shape[0]
        if self._pool is None or pad_rows < 4 * self.tiles:
            vx, vy, ux, uy = slab_eval((0, pad_rows))
        else:
            # row slabs over the padded window, overlapping by the stencil halo
            bounds = np.linspace(0, pad_rows, self.tiles + 1).astype(int)
            parts = list(
                self._pool.map(
                    lambda k: slab_eval((max(0, bounds[k] - 2), min(pad_rows, bounds[k + 1] + 2))),
                    range(self.tiles),
                )
            )
            vx = np.empty_like(xi_x_pad)
            vy = np.empty_like(xi_x_pad)
            ux_all = np.empty_like(xi_x_pad)
            uy_all = np.empty_like(xi_x_pad)
            for k, (pvx, pvy, pux, puy) in enumerate(parts):
                lo = max(0, bounds[k] - 2)
                a, b = bounds[k], bounds[k + 1]
                vx[a:b] = pvx[a - lo:b - lo]
                vy[a:b] = pvy[a - lo:b - lo]
                ux_all[a:b] = pux[a - lo:b - lo]
                uy_all[a:b] = puy[a - lo:b - lo]
            ux, uy = ux_all, uy_all

        _check_cfl(vx, vy, self.scenario.dt, g.ds, f"unit {u.id} ({u.name})")

        rhs_rho = -_flux_divergence(rho_pad, vx, vy, g.ds)
        rhs_xix = -_advective_derivative(xi_x_pad, ux, uy, g.ds)
        rhs_xiy = -_advective_derivative(xi_y_pad, ux, uy, g.ds)
        if self.kin.diffusion > 0.0:
            # conservative diffusion flux for the density equation
            dpad = self.kin.diffusion
            fx = dpad * (rho_pad[:, 2:-1] - rho_pad[:, 1:-2]) / g.ds
            fy = dpad * (rho_pad[2:-1, :] - rho_pad[1:-2, :]) / g.ds
            rhs_rho += (fx[:, 1:] - fx[:, :-1])[2:-2, :] / g.ds
            rhs_rho += (fy[1:, :] - fy[:-1, :])[:, 2:-2] / g.ds

        # combat sinks on the interior box
        rho_pos = np.maximum(rho_box, 0.0)
        cp = self.cp
        enemy_side = BLUE if u.side == RED else RED
        enemy_rho = self._side_rho[enemy_side][j0:j1, i0:i1]
        omega_close = combat_mod.closein_rate(rho_pos, enemy_rho, cp)
        coeff_total = 0.0
        for att, coeff in self._attack_terms.get(u.id, ()):
            r_att = att.strength if att.is_artillery else strengths.get(att.id, 0.0)
            coeff_total += coeff * r_att
        omega_ranged = combat_mod.ranged_rate(rho_pos, coeff_total)

        speed = np.hypot(ux[2:-2, 2:-2], uy[2:-2, 2:-2])
        mass = rho_pos.sum()
        mean_speed = float((rho_pos * speed).sum() / mass) if mass > 0 else 0.0

        return rhs_rho - omega_close - omega_ranged, rhs_xix, rhs_xiy, omega_close, omega_ranged, mean_speed

    def step(self) -> None:
        """Advance the whole system by one time step."""
        self._serial_phase()
        dt = self.scenario.dt
        area = self.grid.cell_area
        live = [u for u in self.units if not u.destroyed and u.box is not None]

        # stage 1: midpoint predictor from the committed state
        committed = {u.id: u.rho[u.box[0]:u.box[1], u.box[2]:u.box[3]] for u in live}
        self._build_stage_fields(committed)
        strengths = self._stage_strengths(committed)
        star: dict[int, tuple] = {}
        for u in live:
            rho_pad = _padded_window(u.rho, u.box)
            xi_x_pad = _padded_window(u.xi_x, u.box)
            xi_y_pad = _padded_window(u.xi_y, u.box)
            rhs_rho, rhs_xx, rhs_xy, _, _, mean_speed = self._unit_rhs(
                u, committed[u.id], xi_x_pad, xi_y_pad, rho_pad, strengths
            )
            u.mean_speed = mean_speed
            half = 0.5 * dt
            star[u.id] = (
                committed[u.id] + half * rhs_rho,
                xi_x_pad.copy(),
                xi_y_pad.copy(),
                rho_pad,
            )
            star[u.id][1][2:-2, 2:-2] += half * rhs_xx
            star[u.id][2][2:-2, 2:-2] += half * rhs_xy

        # stage 2: full step with midpoint rates; casualties accrue here
        star_rho = {uid: s[0] for uid, s in star.items()}
        self._build_stage_fields(star_rho)
        strengths = self._stage_strengths(star_rho)
        for u in live:
            rho_star, xi_x_star, xi_y_star, rho_pad_n = star[u.id]
            rho_star_pad = rho_pad_n.copy()
            rho_star_pad[2:-2, 2:-2] = rho_star
            rhs_rho, rhs_xx, rhs_xy, om_close, om_ranged, _ = self._unit_rhs(
                u, rho_star, xi_x_star, xi_y_star, rho_star_pad, strengths
            )
            j0, j1, i0, i1 = u.box
            u.rho[j0:j1, i0:i1] += dt * rhs_rho
            u.xi_x[j0:j1, i0:i1] += dt * rhs_xx
            u.xi_y[j0:j1, i0:i1] += dt * rhs_xy
            u.casualties_close += dt * float(om_close.sum()) * area
            u.casualties_ranged += dt * float(om_ranged.sum()) * area

            view = u.rho[j0:j1, i0:i1]
            negative = view < 0.0
            if negative.any():
                u.clamped_mass += -float(view[negative].sum()) * area
                view[negative] = 0.0
            if not np.isfinite(view.sum()):
                bad = np.argwhere(~np.isfinite(view))
                raise RuntimeError(
                    f"non-finite density in unit {u.id} ({u.name}) at local cell "
                    f"{tuple(bad[0])} of box {u.box}, t={self.time + dt:.1f} s"
                )
            self._reset_border_identity(u)
            u.box = support_box(u.rho, self.grid, previous=u.box)

        self.time += dt
        self.step_index += 1

    def _reset_border_identity(self, u: UnitState) -> None:
        """On map-border cells that hold no density, pin identity to the
        local coordinates (the inflow boundary condition)."""
        j0, j1, i0, i1 = u.box
        g = self.grid
        edges = []
        if j0 == 0:
            edges.append((slice(0, 1), slice(i0, i1)))
        if j1 == g.ny:
            edges.append((slice(g.ny - 1, g.ny), slice(i0, i1)))
        if i0 == 0:
            edges.append((slice(j0, j1), slice(0, 1)))
        if i1 == g.nx:
            edges.append((slice(j0, j1), slice(g.nx - 1, g.nx)))
        for r, c in edges:
            empty = u.rho[r, c] <= 0.0
            u.xi_x[r, c][empty] = g.cell_x[r, c][empty]
            u.xi_y[r, c][empty] = g.cell_y[r, c][empty]

    # -- run loop ---------------------------------------------------------

    def run(self, writer=None, progress: bool = False) -> RunResult:
        """Run to the scenario duration, sampling at the snapshot cadence."""
        sc = self.scenario
        t_start = _time.perf_counter()
        n_steps = sc.n_steps
        sample_every = max(1, int(round(sc.snapshot_interval / sc.dt)))

        times = [0.0]
        strengths = [self._strength_row()]
        close = [self._casualty_row("close")]
        ranged = [self._casualty_row("ranged")]
        statuses = [[u.status for u in self.units]]
        if writer is not None:
            writer.snapshot(self)

        for k in range(n_steps):
            self.step()
            if (k + 1) % sample_every == 0 or k + 1 == n_steps:
                times.append(self.time)
                strengths.append(self._strength_row())
                close.append(self._casualty_row("close"))
                ranged.append(self._casualty_row("ranged"))
                statuses.append([u.status for u in self.units])
                if writer is not None:
                    writer.snapshot(self)
                if progress:
                    b = sum(r for r, s in zip(strengths[-1], self._sides()) if s == BLUE)
                    r_ = sum(r for r, s in zip(strengths[-1], self._sides()) if s == RED)
                    print(f"  t={self.time:7.0f} s  blue={b:8.1f}  red={r_:8.1f}", flush=True)

        result = RunResult(
            scenario_name=sc.name,
            times=np.array(times),
            unit_ids=[u.id for u in self.units],
            unit_names=[u.name for u in self.units],
            unit_sides=self._sides(),
            initial_strengths=np.array([u.initial_strength for u in self.units]),
            strengths=np.array(strengths),
            casualties_close=np.array(close),
            casualties_ranged=np.array(ranged),
            statuses=statuses,
            clamped_mass=np.array([u.clamped_mass for u in self.units]),
            wall_seconds=_time.perf_counter() - t_start,
        )
        if writer is not None:
            writer.finish(self, result)
        if self._pool is not None:
            self._pool.shutdown()
        return result

    def _sides(self) -> list[str]:
        return [u.side for u in self.units]

    def _strength_row(self) -> list[float]:
        area = self.grid.cell_area
        out = []
        for u in self.units:
            if u.box is None:
                out.append(0.0)
            else:
                j0, j1, i0, i1 = u.box
                out.append(float(u.rho[j0:j1, i0:i1].sum() * area))
        return out

    def _casualty_row(self, kind: str) -> list[float]:
        if kind == "close":
            return [u.casualties_close for u in self.units]
        return [u.casualties_ranged for u in self.units]


def run(scenario: Scenario, tiles: int = 1, writer=None, progress: bool = False) -> RunResult:
    """Initialize and run a scenario to completion."""
    sim = Simulation(scenario, tiles=tiles)
    return sim.run(writer=writer, progress=progress)
