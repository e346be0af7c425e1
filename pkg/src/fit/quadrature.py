"""
Berman-Turner quadrature for the log-pseudolikelihood.

Data points are augmented with dummy points; the Dirichlet tiles of the union
give the quadrature weights, and each quadrature point carries its interaction
covariates against the observed data. The offset is the log of the Poisson
reference intensity s(u) lambda(W) / |W| that the sampler targets, so a fitted
model and its chains share one scale.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from src.errors import EmptyDiagram, InvalidSpec, OutOfWindow
from src.geometry.tessellation import SPATIAL_TERMS, DirichletTessellation, Window, build_tessellation
from src.model.mixture import GaussianMixture
from src.model.pcpi import InteractionThresholds

logger = logging.getLogger(__name__)

DUPLICATE_JITTER = 1e-9
DUMMY_SCHEMES = ("mixture", "grid", "stratified")


def default_mixture() -> Dict[str, Any]:
    """Three-cluster mixture matching the persistence diagrams of the polar curve."""
    return {
        "weights": [1.0, 1.0, 6.0],
        "means": [[0.6, 0.85], [0.4, 0.6], [0.3, 0.01]],
        "variances": [0.001, 0.001, 0.001],
    }


@dataclass(frozen=True)
class DummyPointSpec:
    """
    How dummy points are scattered over the window.

    mixture     `count` draws from the truncated Gaussian mixture
    grid        centres of a grid_size x grid_size grid of cells
    stratified  one uniform point in each grid cell
    """

    count: int = 20
    mixture: Dict[str, Any] = field(default_factory=default_mixture)
    seed: int = 0
    scheme: str = "mixture"
    grid_size: int = 10

    def __post_init__(self):
        if self.scheme not in DUMMY_SCHEMES:
            raise InvalidSpec(f"Unknown dummy scheme '{self.scheme}', expected one of {DUMMY_SCHEMES}")
        if self.scheme == "mixture" and self.count < 1:
            raise InvalidSpec(f"Dummy count must be positive, got {self.count}")
        if self.scheme != "mixture" and self.grid_size < 1:
            raise InvalidSpec(f"grid_size must be positive, got {self.grid_size}")

    def sample(self, window: Window) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        if self.scheme == "mixture":
            return GaussianMixture.from_dict(self.mixture, window).sample(rng, self.count)
        g = self.grid_size
        xs = np.linspace(window.x_min, window.x_max, g + 1)
        ys = np.linspace(window.y_min, window.y_max, g + 1)
        lo = np.array([[x, y] for y in ys[:-1] for x in xs[:-1]])
        step = np.array([xs[1] - xs[0], ys[1] - ys[0]])
        if self.scheme == "grid":
            return lo + step / 2.0
        return lo + rng.uniform(size=lo.shape) * step


@dataclass(frozen=True, eq=False)
class QuadratureScheme:
    """Quadrature points (data first), weights, responses, covariates and offset."""

    u: np.ndarray
    w: np.ndarray
    y: np.ndarray
    covariates: np.ndarray
    offset: np.ndarray
    is_data: np.ndarray
    lambda_w: float = 1.0
    spatial: str = "density"

    def __post_init__(self):
        m = len(self.u)
        for name in ("w", "y", "offset", "is_data"):
            if len(getattr(self, name)) != m:
                raise InvalidSpec(f"Quadrature field '{name}' has the wrong length")
        if self.covariates.shape[0] != m:
            raise InvalidSpec("Covariate matrix has the wrong number of rows")
        if (self.w <= 0).any():
            raise InvalidSpec("Quadrature weights must be positive")

    @property
    def m(self) -> int:
        return len(self.u)

    @property
    def n_data(self) -> int:
        return int(self.is_data.sum())

    @property
    def k(self) -> int:
        return self.covariates.shape[1]


def _make_distinct(points: np.ndarray, window: Window) -> np.ndarray:
    """Nudge exact repeats by DUPLICATE_JITTER so every generator is unique."""
    pts = points.copy()
    seen = set()
    nudged = 0
    for i in range(len(pts)):
        key = (pts[i, 0], pts[i, 1])
        while key in seen:
            step = DUPLICATE_JITTER if window.contains(pts[i] + DUPLICATE_JITTER, strict=True)[0] else -DUPLICATE_JITTER
            pts[i] = pts[i] + step
            key = (pts[i, 0], pts[i, 1])
            nudged += 1
        seen.add(key)
    if nudged:
        logger.warning("Perturbed %d coincident quadrature point(s) by %g", nudged, DUPLICATE_JITTER)
    return pts


def quadrature_covariates(u: np.ndarray, data: np.ndarray, thresholds: InteractionThresholds) -> np.ndarray:
    """
    Row j is minus the per-bin count of data points around u_j.
    The first len(data) rows of `u` are the data points and skip themselves.
    """
    dist = cdist(u, data)
    n = len(data)
    dist[np.arange(n), np.arange(n)] = np.inf
    bins = thresholds.bins(dist)
    counts = np.stack([(bins == l).sum(axis=1) for l in range(thresholds.k)], axis=1)
    return -counts.astype(float)


def build_quadrature(
    D,
    dummy: DummyPointSpec,
    window: Window,
    thresholds: InteractionThresholds,
    lambda_w: Optional[float] = None,
    spatial: str = "density",
) -> Tuple[QuadratureScheme, DirichletTessellation]:
    """
    Assemble the quadrature scheme and the tessellation it was weighted with.

    lambda_w defaults to m (one expected point per tile) for the density term
    and to the diagram size for the area term.
    """
    if spatial not in SPATIAL_TERMS:
        raise InvalidSpec(f"Unknown spatial term '{spatial}', expected one of {SPATIAL_TERMS}")
    if lambda_w is not None and not lambda_w > 0:
        raise InvalidSpec(f"lambda_W must be positive, got {lambda_w}")
    data = np.asarray(getattr(D, "points", D), dtype=float).reshape(-1, 2)
    if len(data) == 0:
        raise EmptyDiagram("Cannot fit a model to an empty diagram")
    outside = ~window.contains(data, strict=True)
    if outside.any():
        raise OutOfWindow(f"Diagram point {data[np.argmax(outside)].tolist()} is not inside {window}")

    dummies = dummy.sample(window)
    u = _make_distinct(np.vstack([data, dummies]), window)
    tess = build_tessellation(u, window)
    n = len(data)
    w = np.array(tess.areas, dtype=float)
    is_data = np.arange(len(u)) < n
    y = np.where(is_data, 1.0 / w, 0.0)
    if lambda_w is None:
        lambda_w = float(len(u)) if spatial == "density" else float(n)
    offset = np.log(tess.tile_terms(spatial)) + np.log(lambda_w / window.area)
    scheme = QuadratureScheme(
        u=u,
        w=w,
        y=y,
        covariates=quadrature_covariates(u, data, thresholds),
        offset=offset,
        is_data=is_data,
        lambda_w=float(lambda_w),
        spatial=spatial,
    )
    logger.info(
        "Quadrature scheme: %d data + %d dummy points (%s), %s term, lambda_W=%g",
        n, len(dummies), dummy.scheme, spatial, lambda_w,
    )
    return scheme, tess
