"""battleflow: a continuum battle-flow combat simulator.

Military units are represented as density fields advected over a terrain
raster by a behavioral walking law, with Lanchester close-in fire,
aggregated ranged fire, per-unit order lists, morale-driven breakpoints,
and seeded randomized ensembles classified by victory criteria.
"""

from .ensemble import PerturbationSpec, classify, perturb_scenario, run_cases
from .kinematics import (
    GoalTransform,
    KinematicsParams,
    density_factor,
    goal_position,
    goal_proximity_factor,
    slope_factor,
    walking_direction,
)
from .scenario_io import load_ensemble_spec, load_scenario, load_terrain
from .solver import RunResult, Simulation, advect, boundary_taper, run
from .terrain import Grid, TerrainFeature, TerrainMap, rasterize_features, smooth_overlay
from .units import (
    BLUE,
    RED,
    ArtilleryUnit,
    FormationSpec,
    GlobalParams,
    Scenario,
    UnitDef,
    UnitState,
    artillery_density,
    init_unit,
    unit_summary,
)

__version__ = "0.1.0"
