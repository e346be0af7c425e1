"""
Tests for the Dirichlet tessellation: tile areas, nearest-generator lookup and intensity.
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pytest
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from src.errors import DuplicateGenerator, EmptyInput, InvalidSpec, OutOfWindow
from src.geometry.tessellation import (
    DirichletTessellation,
    Window,
    build_tessellation,
    intensity_at,
    polygon_area,
    tile_index,
    voronoi_cell,
)

SYMMETRIC = [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)]


def _random_generators(rng, m, window=Window()):
    return window.uniform(rng, m)


def _monte_carlo_areas(generators, window, samples, rng, chunk=100_000):
    counts = np.zeros(len(generators))
    for start in range(0, samples, chunk):
        pts = window.uniform(rng, min(chunk, samples - start))
        counts += np.bincount(np.argmin(cdist(pts, generators), axis=1), minlength=len(generators))
    return counts / samples * window.area


def test_window_validation():
    with pytest.raises(InvalidSpec):
        Window(1.0, 0.0, 0.0, 1.0)
    with pytest.raises(InvalidSpec):
        Window(-0.5, 1.0, 0.0, 1.0)
    assert Window(0.0, 2.0, 0.0, 3.0).area == 6.0


def test_single_generator_covers_window():
    tess = build_tessellation([(0.3, 0.8)], Window())
    assert tess.areas.tolist() == pytest.approx([1.0])


def test_symmetric_generators_have_equal_areas():
    tess = build_tessellation(SYMMETRIC, Window())
    assert tess.areas == pytest.approx([0.25] * 4, abs=1e-12)


def test_polygon_area_of_unit_square():
    assert polygon_area(Window().corners()) == pytest.approx(1.0)
    assert polygon_area([(0, 0), (1, 0)]) == 0.0


def test_voronoi_cell_of_corner_generator():
    cell = voronoi_cell(0, np.array(SYMMETRIC), Window())
    assert polygon_area(cell) == pytest.approx(0.25)
    assert cell[:, 0].max() == pytest.approx(0.5)
    assert cell[:, 1].max() == pytest.approx(0.5)


@pytest.mark.parametrize("m", [2, 28, 200, 500])
def test_area_conservation(m):
    rng = np.random.default_rng(m)
    tess = build_tessellation(_random_generators(rng, m), Window())
    assert (tess.areas > 0).all()
    assert abs(tess.areas.sum() - 1.0) <= 1e-9


def test_area_conservation_on_a_rectangle():
    window = Window(0.5, 2.5, 0.0, 1.5)
    rng = np.random.default_rng(3)
    tess = build_tessellation(_random_generators(rng, 50, window), window)
    assert abs(tess.areas.sum() - window.area) <= 1e-9 * window.area


@pytest.mark.slow
def test_areas_match_monte_carlo_membership():
    rng = np.random.default_rng(28)
    generators = _random_generators(rng, 28)
    tess = build_tessellation(generators, Window())
    estimate = _monte_carlo_areas(generators, Window(), 1_000_000, np.random.default_rng(1))
    assert np.max(np.abs(estimate - tess.areas)) < 2e-3


@pytest.mark.slow
def test_areas_match_monte_carlo_over_many_generator_sets():
    rng = np.random.default_rng(30)
    samples = Window().uniform(rng, 1_000_000)
    for _ in range(100):
        generators = _random_generators(rng, int(rng.integers(5, 201)))
        tess = build_tessellation(generators, Window())
        _, nearest = cKDTree(generators).query(samples)
        estimate = np.bincount(nearest, minlength=len(generators)) / len(samples)
        assert abs(tess.areas.sum() - 1.0) <= 1e-9
        assert np.max(np.abs(estimate - tess.areas)) < 2e-3


def test_adding_a_generator_never_grows_a_tile():
    rng = np.random.default_rng(11)
    generators = _random_generators(rng, 30)
    before = build_tessellation(generators, Window()).areas
    after = build_tessellation(np.vstack([generators, [0.5, 0.5]]), Window()).areas
    assert (after[:-1] <= before + 1e-12).all()


def test_build_errors():
    with pytest.raises(EmptyInput):
        build_tessellation([], Window())
    with pytest.raises(DuplicateGenerator):
        build_tessellation([(0.2, 0.2), (0.5, 0.5), (0.2, 0.2)], Window())
    with pytest.raises(OutOfWindow):
        build_tessellation([(0.2, 0.2), (1.2, 0.5)], Window())
    with pytest.raises(OutOfWindow):
        # boundary points are not strictly inside
        build_tessellation([(0.0, 0.5)], Window())


def test_tile_index_lookup_and_ties():
    tess = build_tessellation([(0.25, 0.5), (0.75, 0.5), (0.5, 0.875)], Window())
    assert tile_index((0.75, 0.5), tess) == 1
    assert tile_index((0.5, 0.5), tess) == 0  # equidistant from 0 and 1
    sym = build_tessellation(SYMMETRIC, Window())
    assert tile_index((0.1, 0.1), sym) == 0
    with pytest.raises(OutOfWindow):
        tile_index((1.5, 0.5), sym)


def test_intensity_at():
    sym = build_tessellation(SYMMETRIC, Window())
    rng = np.random.default_rng(0)
    for x in Window().uniform(rng, 20):
        assert intensity_at(x, sym) == pytest.approx(0.25)

    tess = build_tessellation(_random_generators(np.random.default_rng(5), 12), Window())
    for i, g in enumerate(tess.generators):
        assert intensity_at(g, tess) == tess.areas[i]
    with pytest.raises(OutOfWindow):
        intensity_at((-0.1, 0.5), tess)


def test_relative_densities():
    window = Window(0.0, 2.0, 0.0, 1.0)
    tess = build_tessellation(_random_generators(np.random.default_rng(4), 17, window), window)
    s = tess.tile_terms("density")
    assert np.sum(tess.areas * s) == pytest.approx(window.area, rel=1e-9)
    assert np.allclose(tess.areas * s, window.area / 17)
    assert np.array_equal(tess.tile_terms("area"), tess.areas)
    with pytest.raises(InvalidSpec):
        tess.tile_terms("volume")

    two = build_tessellation([(0.25, 0.5), (0.5, 0.5)], Window())
    assert two.areas.tolist() == pytest.approx([0.375, 0.625])
    assert two.densities([(0.1, 0.1), (0.9, 0.9)]).tolist() == pytest.approx([4 / 3, 0.8])


def test_partition_property_against_brute_force():
    rng = np.random.default_rng(21)
    tess = build_tessellation(_random_generators(rng, 40), Window())
    pts = Window().uniform(rng, 10_000)
    nearest = np.argmin(cdist(pts, tess.generators), axis=1)
    assert np.array_equal(tess.intensities(pts), tess.areas[nearest])


def test_tessellation_json_round_trip():
    tess = build_tessellation(_random_generators(np.random.default_rng(2), 9), Window())
    again = DirichletTessellation.from_dict(tess.to_dict())
    assert np.array_equal(again.generators, tess.generators)
    assert np.array_equal(again.areas, tess.areas)
    assert again.window == tess.window
