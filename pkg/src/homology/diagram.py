"""
Persistence diagrams in the tilted (birth, persistence) representation.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
import pandas as pd

from src.errors import InvalidSpec, NegativePersistence

CSV_COLUMNS = ["birth", "persistence", "dim"]


def tilt(point: Tuple[float, float]) -> Tuple[float, float]:
    """Map an untilted pair (b, d) to (b, d - b)."""
    b, d = float(point[0]), float(point[1])
    if d < b:
        raise NegativePersistence(f"Death {d} precedes birth {b}")
    return b, d - b


def tilt_pairs(pairs) -> np.ndarray:
    """Vectorised tilt of an (n, 2) array of (birth, death) rows."""
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if (arr[:, 1] < arr[:, 0]).any():
        raise NegativePersistence("At least one death precedes its birth")
    return np.column_stack([arr[:, 0], arr[:, 1] - arr[:, 0]])


@dataclass(frozen=True, eq=False)
class PersistenceDiagram:
    """Finite multiset of tilted points on the wedge b, p >= 0."""

    points: np.ndarray
    homology_dimension: int = 1
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if (pts < 0).any():
            raise InvalidSpec("Diagram points must lie in the wedge b, p >= 0")
        if self.homology_dimension not in (0, 1):
            raise InvalidSpec(f"Unsupported homology dimension {self.homology_dimension}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def births(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def persistences(self) -> np.ndarray:
        return self.points[:, 1]

    def canonical(self) -> np.ndarray:
        """Points ordered by decreasing persistence, then birth."""
        order = np.lexsort((self.births, -self.persistences))
        return self.points[order]

    def same_points(self, other: "PersistenceDiagram") -> bool:
        return len(self) == len(other) and np.array_equal(self.canonical(), other.canonical())

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.points, columns=CSV_COLUMNS[:2])
        frame["dim"] = self.homology_dimension
        return frame

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False)

    @classmethod
    def from_csv(cls, path, dim: Optional[int] = None) -> "PersistenceDiagram":
        frame = pd.read_csv(path, float_precision="round_trip")
        missing = [c for c in CSV_COLUMNS if c not in frame.columns]
        if missing:
            raise InvalidSpec(f"Diagram file {path} lacks column(s) {missing}")
        if dim is None:
            dims = frame["dim"].unique()
            if len(dims) > 1:
                raise InvalidSpec(f"Diagram file {path} mixes dimensions {sorted(dims)}; pass dim")
            dim = int(dims[0]) if len(dims) else 1
        frame = frame[frame["dim"] == dim]
        return cls(frame[["birth", "persistence"]].to_numpy(dtype=float), homology_dimension=int(dim))
