"""
Pairwise interacting point-process model of a persistence diagram.

The unnormalised log density of a diagram D is

    U(D) = sum_i ln s(d_i) - sum_{i<j} theta . H(d_i, d_j)

where s is the Dirichlet-tile spatial term (relative tile density by default,
see SPATIAL_TERMS) and H(x, y) is the indicator vector of
the distance bin [r_{l-1}, r_l) holding |x - y|. The normalising constant is
never evaluated: every consumer works with differences of U.
"""
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist

from src.errors import InvalidSpec, OutOfWindow, PdsimError
from src.geometry.tessellation import SPATIAL_TERMS, DirichletTessellation, Window, build_tessellation


@dataclass(frozen=True, eq=False)
class InteractionThresholds:
    """0 = r_0 < r_1 < ... < r_k; bin l is the half-open interval [r_{l-1}, r_l)."""

    r: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float).reshape(-1)
        if len(r) < 1:
            raise InvalidSpec("At least one interaction threshold is required")
        if r[0] <= 0 or (np.diff(r) <= 0).any():
            raise InvalidSpec(f"Thresholds must be positive and strictly increasing, got {r.tolist()}")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    @property
    def k(self) -> int:
        return len(self.r)

    @property
    def reach(self) -> float:
        return float(self.r[-1])

    def bins(self, distances) -> np.ndarray:
        """Bin index per distance; k means no interaction (distance >= r_k)."""
        return np.searchsorted(self.r, np.asarray(distances, dtype=float), side="right")

    def counts(self, distances) -> np.ndarray:
        idx = self.bins(distances).reshape(-1)
        return np.bincount(idx[idx < self.k], minlength=self.k)

    def to_list(self):
        return self.r.tolist()


@dataclass(frozen=True, eq=False)
class PcpiModel:
    """Thresholds, inhibition coefficients, intensity tessellation and Poisson reference mean."""

    thresholds: InteractionThresholds
    theta: np.ndarray
    intensity: DirichletTessellation
    lambda_w: float
    spatial: str = "density"

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        if len(theta) != self.thresholds.k:
            raise InvalidSpec(f"Expected {self.thresholds.k} coefficients, got {len(theta)}")
        if (theta < 0).any() or not np.isfinite(theta).all():
            raise InvalidSpec(f"Coefficients must be finite and nonnegative, got {theta.tolist()}")
        if not self.lambda_w > 0:
            raise InvalidSpec(f"lambda_W must be positive, got {self.lambda_w}")
        if self.spatial not in SPATIAL_TERMS:
            raise InvalidSpec(f"Unknown spatial term '{self.spatial}', expected one of {SPATIAL_TERMS}")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "lambda_w", float(self.lambda_w))

    @property
    def window(self) -> Window:
        return self.intensity.window

    def check_inside(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float)).reshape(-1, 2)
        inside = self.window.contains(pts)
        if not inside.all():
            raise OutOfWindow(f"Point {pts[np.argmin(inside)].tolist()} lies outside {self.window}")
        return pts

    def log_intensity(self, points) -> np.ndarray:
        """ln s at each point (no window check)."""
        tiles = self.intensity.tile_indices(points)
        return np.log(self.intensity.tile_terms(self.spatial)[tiles])

    def interaction_energy(self, x, others) -> float:
        """theta . sum_y H(x, y) over the rows of `others`."""
        others = np.asarray(others, dtype=float).reshape(-1, 2)
        if len(others) == 0:
            return 0.0
        dist = np.hypot(others[:, 0] - x[0], others[:, 1] - x[1])
        return float(self.theta @ self.thresholds.counts(dist))

    def local_log_intensity(self, x, others) -> float:
        """ln s(x) - theta . H(x, others), with `others` already excluding x."""
        return float(self.log_intensity(x)[0]) - self.interaction_energy(x, others)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "thresholds": self.thresholds.to_list(),
            "theta": self.theta.tolist(),
            "lambda_w": self.lambda_w,
            "spatial": self.spatial,
            "window": self.window.to_dict(),
            "tessellation": self.intensity.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PcpiModel":
        try:
            window = Window.from_dict(data["window"])
            tess = build_tessellation(data["tessellation"]["generators"], window)
            return cls(
                InteractionThresholds(data["thresholds"]),
                data["theta"],
                tess,
                float(data["lambda_w"]),
                data.get("spatial", "density"),
            )
        except PdsimError:
            raise
        except (AttributeError, KeyError, TypeError, ValueError) as exc:
            raise InvalidSpec(f"Malformed model description: {exc!r}") from exc


def interaction_covariates(x, others, thresholds: InteractionThresholds) -> np.ndarray:
    """Per-bin neighbour counts of x among `others` (x itself must not be in `others`)."""
    others = np.asarray(others, dtype=float).reshape(-1, 2)
    if len(others) == 0:
        return np.zeros(thresholds.k, dtype=np.int64)
    dist = np.hypot(others[:, 0] - x[0], others[:, 1] - x[1])
    return thresholds.counts(dist)


def pcpi(x, y, model: PcpiModel) -> float:
    """Step interaction h(x, y) = exp(-theta . H(x, y)); 1 beyond the last threshold."""
    return float(np.exp(-model.interaction_energy(np.asarray(x, dtype=float), [y])))


def log_potential(D, model: PcpiModel) -> float:
    """U(D) in log space; D is a PersistenceDiagram or an (n, 2) array."""
    pts = model.check_inside(getattr(D, "points", D))
    if len(pts) == 0:
        return 0.0
    spatial = float(model.log_intensity(pts).sum())
    if len(pts) < 2:
        return spatial
    return spatial - float(model.theta @ model.thresholds.counts(pdist(pts)))


def log_conditional_intensity(u, D, model: PcpiModel, exclude: Optional[Sequence[int]] = None) -> float:
    """
    ln lambda(u; D) = ln s(u) - theta . sum_{x in D, x != u} H(u, x).

    The first point of D equal to u is u itself and is left out of the sum;
    further copies of u in a multiset D still interact. `exclude` names the
    indices to drop explicitly instead.
    """
    u = model.check_inside(u)[0]
    pts = np.asarray(getattr(D, "points", D), dtype=float).reshape(-1, 2)
    keep = np.ones(len(pts), dtype=bool)
    if exclude is None:
        matches = np.flatnonzero(np.all(pts == u, axis=1))
        if len(matches):
            keep[matches[0]] = False
    else:
        keep[list(exclude)] = False
    return model.local_log_intensity(u, pts[keep])
