from src.geometry.tessellation import (
    SPATIAL_TERMS,
    DirichletTessellation,
    Window,
    build_tessellation,
    intensity_at,
    polygon_area,
    tile_index,
    voronoi_cell,
)

__all__ = [
    "SPATIAL_TERMS",
    "DirichletTessellation",
    "Window",
    "build_tessellation",
    "intensity_at",
    "polygon_area",
    "tile_index",
    "voronoi_cell",
]
