"""
Synthetic point clouds sampled from a noisy polar curve.
"""
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from src.errors import InvalidSpec


@dataclass(frozen=True)
class PolarCurveSpec:
    """
    Curve r(phi) = a + b cos(2 phi) with isotropic Gaussian noise.
    With a < b the curve has two large and two small lobes.
    """

    a: float = 0.5
    b: float = 1.0
    n: int = 100
    noise_sd: float = 0.1

    def __post_init__(self):
        if self.n < 3:
            raise InvalidSpec(f"Polar curve needs at least 3 samples, got {self.n}")
        if self.noise_sd < 0:
            raise InvalidSpec(f"noise_sd must be nonnegative, got {self.noise_sd}")

    def radius(self, phi) -> np.ndarray:
        return self.a + self.b * np.cos(2.0 * np.asarray(phi))

    def to_dict(self) -> Dict[str, Any]:
        return {"a": self.a, "b": self.b, "n": self.n, "noise_sd": self.noise_sd}


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    label: Optional[str] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if len(pts) < 1:
            raise InvalidSpec("A point cloud needs at least one point")
        if not np.isfinite(pts).all():
            raise InvalidSpec("Point cloud coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def to_csv(self, path) -> None:
        pd.DataFrame(self.points, columns=["x", "y"]).to_csv(path, index=False)

    @classmethod
    def from_csv(cls, path, label: Optional[str] = None) -> "PointCloud":
        frame = pd.read_csv(path, float_precision="round_trip")
        if list(frame.columns[:2]) != ["x", "y"]:
            raise InvalidSpec(f"Point cloud file {path} must start with columns x,y")
        return cls(frame[["x", "y"]].to_numpy(dtype=float), label=label)


def sample_polar_curve(spec: PolarCurveSpec, seed: int) -> PointCloud:
    """Draw `spec.n` noisy points from the polar curve; deterministic given seed."""
    rng = np.random.default_rng(seed)
    phi = rng.uniform(0.0, 2.0 * np.pi, spec.n)
    r = spec.radius(phi)
    points = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
    if spec.noise_sd > 0:
        points = points + rng.normal(0.0, spec.noise_sd, size=points.shape)
    return PointCloud(points, label=f"polar(a={spec.a}, b={spec.b}, n={spec.n}, sd={spec.noise_sd})")
