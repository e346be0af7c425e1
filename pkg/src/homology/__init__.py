from src.homology.diagram import PersistenceDiagram, tilt, tilt_pairs
from src.homology.point_cloud import PointCloud, PolarCurveSpec, sample_polar_curve
from src.homology.rips import vietoris_rips_diagram

__all__ = [
    "PersistenceDiagram",
    "PointCloud",
    "PolarCurveSpec",
    "sample_polar_curve",
    "tilt",
    "tilt_pairs",
    "vietoris_rips_diagram",
]
