"""Elevation and overlay rasters built from geometric feature descriptions.

The battlefield map consists of two scalar rasters on a uniform grid: the
elevation H (meters) and a terrain overlay T, a dimensionless walking-speed
multiplier in [0, 1] that encodes vegetation, fences, roads and buildings.

World frame: x east, y north, meters. Rasters are indexed ``[j, i]`` with
``j`` the y (row) index and ``i`` the x (column) index; cell (i, j) is
centered at ``origin + ((i + 0.5) * ds, (j + 0.5) * ds)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.ndimage import uniform_filter
from scipy.special import erf


@dataclass
class Grid:
    """Uniform raster grid: cell counts, cell size (m), SW-corner origin."""

    nx: int
    ny: int
    ds: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ValueError(f"grid must be at least 8x8 cells, got {self.nx}x{self.ny}")
        if self.ds <= 0:
            raise ValueError("cell size ds must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def cell_area(self) -> float:
        return self.ds * self.ds

    @property
    def extent(self) -> tuple[float, float]:
        """Map dimensions (Lx, Ly) in meters."""
        return (self.nx * self.ds, self.ny * self.ds)

    @cached_property
    def x_centers(self) -> np.ndarray:
        return self.origin[0] + (np.arange(self.nx) + 0.5) * self.ds

    @cached_property
    def y_centers(self) -> np.ndarray:
        return self.origin[1] + (np.arange(self.ny) + 0.5) * self.ds

    @cached_property
    def cell_x(self) -> np.ndarray:
        """World x coordinate of every cell center, shape (ny, nx)."""
        return np.broadcast_to(self.x_centers[None, :], self.shape).copy()

    @cached_property
    def cell_y(self) -> np.ndarray:
        """World y coordinate of every cell center, shape (ny, nx)."""
        return np.broadcast_to(self.y_centers[:, None], self.shape).copy()

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)


@dataclass
class TerrainFeature:
    """One map feature contributing to the overlay raster.

    kind:
        "polygon" - constant multiplier inside the polygon (vegetation).
        "line"    - polyline with an error-function dip toward ``value``.
        "point"   - single peak with the same radial dip (buildings).
    value:
        Overlay multiplier at the feature itself, in [0, 1].
    scale:
        Decay scale in meters for line/point features (unused for polygons).
    geometry:
        Vertex list: >= 3 vertices for polygons, >= 2 for lines, exactly 1
        for points. Each vertex is an (x, y) pair in world meters.
    """

    kind: str
    value: float
    geometry: list[tuple[float, float]]
    scale: float | None = None
    name: str = ""

    def validate(self, index: int = -1) -> None:
        tag = f"feature {index} ({self.name or self.kind})"
        if self.kind not in ("polygon", "line", "point"):
            raise ValueError(f"{tag}: unknown kind {self.kind!r}")
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"{tag}: value {self.value} outside [0, 1]")
        n = len(self.geometry)
        if self.kind == "polygon":
            if n < 3:
                raise ValueError(f"{tag}: polygon needs >= 3 vertices, got {n}")
            if abs(_shoelace_area(self.geometry)) < 1e-9:
                raise ValueError(f"{tag}: degenerate polygon (zero area)")
        elif self.kind == "line":
            if n < 2:
                raise ValueError(f"{tag}: line needs >= 2 vertices, got {n}")
        elif n != 1:
            raise ValueError(f"{tag}: point feature takes exactly 1 vertex, got {n}")
        if self.kind != "polygon":
            if self.scale is None or self.scale <= 0:
                raise ValueError(f"{tag}: needs a positive decay scale")


@dataclass
class TerrainMap:
    """Elevation raster H (m) and overlay raster T (speed multiplier)."""

    grid: Grid
    elevation: np.ndarray
    overlay: np.ndarray

    def __post_init__(self):
        if self.elevation.shape != self.grid.shape:
            raise ValueError("elevation raster does not match grid shape")
        if self.overlay.shape != self.grid.shape:
            raise ValueError("overlay raster does not match grid shape")
        if not np.all(np.isfinite(self.elevation)):
            raise ValueError("elevation contains non-finite values")

    @cached_property
    def elevation_gradient(self) -> tuple[np.ndarray, np.ndarray]:
        """(dH/dx, dH/dy): central differences, one-sided at borders."""
        gy, gx = np.gradient(self.elevation, self.grid.ds, edge_order=1)
        return gx, gy

    def slope_along(self, cell: tuple[int, int], direction: tuple[float, float]) -> float:
        """Directional derivative of elevation at cell (i, j) along a unit vector."""
        i, j = cell
        gx, gy = self.elevation_gradient
        return float(gx[j, i] * direction[0] + gy[j, i] * direction[1])

    def elevation_at(self, x: float, y: float) -> float:
        """Elevation at a world point (nearest cell)."""
        g = self.grid
        i = min(max(int((x - g.origin[0]) / g.ds), 0), g.nx - 1)
        j = min(max(int((y - g.origin[1]) / g.ds), 0), g.ny - 1)
        return float(self.elevation[j, i])


def _shoelace_area(vertices) -> float:
    xs = np.array([v[0] for v in vertices])
    ys = np.array([v[1] for v in vertices])
    return 0.5 * float(np.sum(xs * np.roll(ys, -1) - np.roll(xs, -1) * ys))


def _polygon_mask(vertices, X, Y) -> np.ndarray:
    """Even-odd crossing test, vectorized over the cell-center rasters."""
    inside = np.zeros(X.shape, dtype=bool)
    n = len(vertices)
    xj, yj = vertices[-1]
    for xi, yi in vertices:
        crosses = (yi > Y) != (yj > Y)
        denom = yj - yi
        if denom != 0.0:
            xcross = xi + (Y - yi) * (xj - xi) / denom
            inside ^= crosses & (X < xcross)
        xj, yj = xi, yi
    return inside


def _segment_distance(p0, p1, X, Y) -> np.ndarray:
    x0, y0 = p0
    dx, dy = p1[0] - x0, p1[1] - y0
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        return np.hypot(X - x0, Y - y0)
    t = np.clip(((X - x0) * dx + (Y - y0) * dy) / seg2, 0.0, 1.0)
    return np.hypot(X - (x0 + t * dx), Y - (y0 + t * dy))


def _polyline_distance(vertices, X, Y) -> np.ndarray:
    dist = _segment_distance(vertices[0], vertices[1], X, Y)
    for p0, p1 in zip(vertices[1:-1], vertices[2:]):
        np.minimum(dist, _segment_distance(p0, p1, X, Y), out=dist)
    return dist


def rasterize_features(grid: Grid, base_speed: float, features: list[TerrainFeature]) -> np.ndarray:
    """Build the overlay raster from a feature list.

    Multiple overlapping features combine by taking the minimum multiplier
    (most restrictive wins), so the result is independent of list order.
    Open field carries ``base_speed``; line and point features dip from the
    base toward their value following ``v + (base - v) * erf(dist / scale)``.
    """
    if not 0.0 < base_speed <= 1.0:
        raise ValueError(f"base_speed {base_speed} outside (0, 1]")
    for idx, f in enumerate(features):
        f.validate(idx)

    X, Y = grid.cell_x, grid.cell_y
    overlay = np.full(grid.shape, base_speed)
    for f in features:
        if f.kind == "polygon":
            mask = _polygon_mask(f.geometry, X, Y)
            contrib = np.where(mask, f.value, base_speed)
        else:
            if f.kind == "line" and len(f.geometry) >= 2:
                dist = _polyline_distance(f.geometry, X, Y)
            else:
                dist = np.hypot(X - f.geometry[0][0], Y - f.geometry[0][1])
            contrib = f.value + (base_speed - f.value) * erf(dist / f.scale)
        np.minimum(overlay, contrib, out=overlay)
    return overlay


def smooth_overlay(tmap: TerrainMap, passes: int) -> TerrainMap:
    """Apply ``passes`` sweeps of the 3x3 uniform averaging stencil.

    Edge cells use replicated neighbors; every pass is a convex combination,
    so the value range never expands.
    """
    if passes < 0:
        raise ValueError("passes must be >= 0")
    overlay = tmap.overlay.copy()
    for _ in range(passes):
        overlay = uniform_filter(overlay, size=3, mode="nearest")
    return TerrainMap(tmap.grid, tmap.elevation, overlay)


def flat_map(grid: Grid, elevation: float = 0.0, overlay: float = 1.0) -> TerrainMap:
    """Convenience constructor for featureless terrain (mostly for tests)."""
    return TerrainMap(
        grid,
        np.full(grid.shape, float(elevation)),
        np.full(grid.shape, float(overlay)),
    )
