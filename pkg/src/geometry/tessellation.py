"""
Dirichlet (Voronoi) tessellation of a rectangular window.

Each cell is obtained by clipping the window rectangle with the half-planes
that separate its generator from every other generator. The tile areas are the
quadrature weights. The piecewise-constant spatial term s is read off the tiles
in one of two ways:

    density  |W| / (m A_i), the relative Dirichlet density (averages 1 over W)
    area     A_i itself
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence

import numpy as np

from src.errors import DuplicateGenerator, EmptyInput, InvalidSpec, OutOfWindow

logger = logging.getLogger(__name__)

AREA_RTOL = 1e-9
SPATIAL_TERMS = ("density", "area")


@dataclass(frozen=True)
class Window:
    """Axis-aligned rectangle inside the wedge {(b, p) : b, p >= 0}."""

    x_min: float = 0.0
    x_max: float = 1.0
    y_min: float = 0.0
    y_max: float = 1.0

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise InvalidSpec(f"Degenerate window {self}")
        if self.x_min < 0 or self.y_min < 0:
            raise InvalidSpec(f"Window {self} leaves the wedge b, p >= 0")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def corners(self) -> np.ndarray:
        """Counterclockwise corner list."""
        return np.array([
            [self.x_min, self.y_min],
            [self.x_max, self.y_min],
            [self.x_max, self.y_max],
            [self.x_min, self.y_max],
        ])

    def contains(self, points, strict: bool = False) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        x, y = pts[:, 0], pts[:, 1]
        if strict:
            return (self.x_min < x) & (x < self.x_max) & (self.y_min < y) & (y < self.y_max)
        return (self.x_min <= x) & (x <= self.x_max) & (self.y_min <= y) & (y <= self.y_max)

    def uniform(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.column_stack([
            rng.uniform(self.x_min, self.x_max, size),
            rng.uniform(self.y_min, self.y_max, size),
        ])

    def to_dict(self) -> Dict[str, float]:
        return {"x_min": self.x_min, "x_max": self.x_max, "y_min": self.y_min, "y_max": self.y_max}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Window":
        return cls(**{k: float(data[k]) for k in ("x_min", "x_max", "y_min", "y_max")})


@dataclass(frozen=True, eq=False)
class DirichletTessellation:
    """Generators, their clipped cells and the tile areas."""

    generators: np.ndarray
    areas: np.ndarray
    window: Window

    def __len__(self) -> int:
        return len(self.areas)

    def tile_indices(self, points) -> np.ndarray:
        """Nearest-generator index for each row of `points` (ties -> smallest index)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        diff = pts[:, None, :] - self.generators[None, :, :]
        # argmin returns the first minimum, which is the tie rule
        return np.argmin(np.einsum("ijk,ijk->ij", diff, diff), axis=1)

    def intensities(self, points) -> np.ndarray:
        return self.areas[self.tile_indices(points)]

    def densities(self, points) -> np.ndarray:
        """Relative tile density |W| / (m A) at each point."""
        return self.tile_terms("density")[self.tile_indices(points)]

    def tile_terms(self, spatial: str) -> np.ndarray:
        """Per-tile spatial term s for one of SPATIAL_TERMS."""
        if spatial == "density":
            return self.window.area / (len(self) * self.areas)
        if spatial == "area":
            return np.asarray(self.areas)
        raise InvalidSpec(f"Unknown spatial term '{spatial}', expected one of {SPATIAL_TERMS}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "window": self.window.to_dict(),
            "generators": self.generators.tolist(),
            "areas": self.areas.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DirichletTessellation":
        # areas are recomputed from the generators
        return build_tessellation(data["generators"], Window.from_dict(data["window"]))


def _clip_half_plane(polygon: List[np.ndarray], normal: np.ndarray, offset: float) -> List[np.ndarray]:
    """Sutherland-Hodgman step: keep the part of `polygon` with normal . x <= offset."""
    out = []
    n = len(polygon)
    for i in range(n):
        a, b = polygon[i], polygon[(i + 1) % n]
        sa = float(normal @ a) - offset
        sb = float(normal @ b) - offset
        if sa <= 0:
            out.append(a)
        if (sa <= 0) != (sb <= 0):
            t = sa / (sa - sb)
            out.append(a + t * (b - a))
    return out


def polygon_area(polygon) -> float:
    """Shoelace area of a simple polygon given as a vertex list."""
    if len(polygon) < 3:
        return 0.0
    pts = np.asarray(polygon, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))


def voronoi_cell(index: int, generators: np.ndarray, window: Window) -> np.ndarray:
    """Cell of generator `index` clipped to the window, as a CCW vertex array."""
    p = generators[index]
    polygon = list(window.corners())
    dist = np.hypot(*(generators - p).T)
    for j in np.argsort(dist, kind="stable"):
        if j == index:
            continue
        reach = max(float(np.hypot(*(v - p))) for v in polygon)
        # generators sorted by distance: once the bisector lies beyond the cell, none cut it
        if dist[j] / 2.0 > reach:
            break
        q = generators[j]
        normal = q - p
        polygon = _clip_half_plane(polygon, normal, float(normal @ (p + q)) / 2.0)
        if not polygon:
            break
    return np.array(polygon)


def build_tessellation(generators: Sequence, window: Window) -> DirichletTessellation:
    """
    Build the Dirichlet tessellation of `window` by `generators`.

    Raises EmptyInput without generators, OutOfWindow when a generator is not
    strictly inside the window and DuplicateGenerator on exact repeats.
    """
    pts = np.asarray(generators, dtype=float).reshape(-1, 2) if len(generators) else np.empty((0, 2))
    if len(pts) == 0:
        raise EmptyInput("At least one generator is required")
    outside = ~window.contains(pts, strict=True)
    if outside.any():
        raise OutOfWindow(f"Generator {pts[np.argmax(outside)].tolist()} is not strictly inside {window}")
    _, counts = np.unique(pts, axis=0, return_counts=True)
    if (counts > 1).any():
        raise DuplicateGenerator(f"{int((counts > 1).sum())} generator location(s) repeated")

    areas = np.array([polygon_area(voronoi_cell(i, pts, window)) for i in range(len(pts))])
    total = float(areas.sum())
    if abs(total - window.area) > AREA_RTOL * window.area:
        logger.warning("Tile areas sum to %.12g, window area is %.12g", total, window.area)
    pts.setflags(write=False)
    areas.setflags(write=False)
    logger.debug("Tessellated %s with %d tiles", window, len(pts))
    return DirichletTessellation(generators=pts, areas=areas, window=window)


def _check_inside(x, tess: DirichletTessellation) -> np.ndarray:
    pt = np.asarray(x, dtype=float).reshape(2)
    if not tess.window.contains(pt)[0]:
        raise OutOfWindow(f"Point {pt.tolist()} lies outside {tess.window}")
    return pt


def tile_index(x, tess: DirichletTessellation) -> int:
    """Index (0-based) of the generator nearest to x; ties go to the smallest index."""
    return int(tess.tile_indices(_check_inside(x, tess))[0])


def intensity_at(x, tess: DirichletTessellation) -> float:
    """Area of the tile containing x (the `area` spatial term s(x))."""
    return float(tess.areas[tile_index(x, tess)])
