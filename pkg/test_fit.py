"""
Tests for the quadrature scheme, the pseudolikelihood and the IRLS fit.
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pandas as pd
import pytest
from scipy.optimize import minimize

from src.errors import EmptyDiagram, InvalidSpec, OutOfWindow, Singular
from src.fit.mple import (
    FitResult,
    fit_mple,
    log_pseudolikelihood,
    log_pseudolikelihood_direct,
    pseudolikelihood_gradient,
    pseudolikelihood_hessian,
)
from src.fit.quadrature import DummyPointSpec, QuadratureScheme, build_quadrature, quadrature_covariates
from src.fit.robustness import robustness_study
from src.geometry.tessellation import Window
from src.homology.diagram import PersistenceDiagram
from src.homology.point_cloud import PolarCurveSpec
from src.model.pcpi import InteractionThresholds, interaction_covariates

THRESHOLDS = InteractionThresholds([0.1, 0.2, 0.3])
# eight points shaped like a polar-curve H1 diagram: a few prominent loops, the rest near the axis
EIGHT_POINTS = [
    (0.12, 0.9409), (0.15, 0.8284), (0.22, 0.6207), (0.31, 0.4035),
    (0.18, 0.0962), (0.27, 0.0411), (0.41, 0.0215), (0.35, 0.0603),
]


@pytest.fixture(scope="module")
def uniform_scheme():
    rng = np.random.default_rng(2024)
    data = PersistenceDiagram(rng.uniform(0.02, 0.98, size=(30, 2)))
    Q, tess = build_quadrature(data, DummyPointSpec(scheme="grid", grid_size=10), Window(), THRESHOLDS)
    return Q, tess, data


def test_dummy_spec_validation():
    with pytest.raises(InvalidSpec):
        DummyPointSpec(scheme="hexagonal")
    with pytest.raises(InvalidSpec):
        DummyPointSpec(count=0)
    with pytest.raises(InvalidSpec):
        DummyPointSpec(scheme="grid", grid_size=0)


def test_dummy_schemes():
    window = Window(0.0, 2.0, 0.0, 1.0)
    grid = DummyPointSpec(scheme="grid", grid_size=4).sample(window)
    assert grid.shape == (16, 2)
    assert sorted(set(grid[:, 0].tolist())) == pytest.approx([0.25, 0.75, 1.25, 1.75])
    strat = DummyPointSpec(scheme="stratified", grid_size=4, seed=3).sample(window)
    cells = np.floor(strat / np.array([0.5, 0.25])).astype(int)
    assert len({tuple(c) for c in cells}) == 16
    mixed = DummyPointSpec(seed=1).sample(Window())
    assert mixed.shape == (20, 2)
    assert np.array_equal(mixed, DummyPointSpec(seed=1).sample(Window()))


def test_quadrature_of_eight_points():
    Q, tess = build_quadrature(PersistenceDiagram(EIGHT_POINTS), DummyPointSpec(seed=5), Window(), THRESHOLDS)
    assert Q.m == 28 and Q.n_data == 8 and Q.k == 3
    assert len(tess) == 28
    assert Q.is_data[:8].all() and not Q.is_data[8:].any()
    assert np.array_equal(Q.u[:8], np.array(EIGHT_POINTS))
    assert np.allclose(Q.y[:8] * Q.w[:8], 1.0)
    assert (Q.y[8:] == 0).all()
    assert abs(Q.w.sum() - 1.0) <= 1e-9
    # one expected point per tile: the density offset reduces to -ln w
    assert Q.lambda_w == 28.0 and Q.spatial == "density"
    assert np.allclose(Q.offset, -np.log(Q.w))


def test_area_term_offset():
    data = PersistenceDiagram(EIGHT_POINTS)
    Q, _ = build_quadrature(data, DummyPointSpec(seed=5), Window(), THRESHOLDS, spatial="area")
    assert Q.lambda_w == 8.0
    assert np.allclose(Q.offset, np.log(Q.w) + np.log(8.0))
    Q2, _ = build_quadrature(data, DummyPointSpec(seed=5), Window(0.0, 2.0, 0.0, 1.0), THRESHOLDS, lambda_w=3.0)
    assert Q2.lambda_w == 3.0
    assert np.allclose(Q2.offset, np.log(2.0 / (28 * Q2.w)) + np.log(3.0 / 2.0))
    with pytest.raises(InvalidSpec):
        build_quadrature(data, DummyPointSpec(), Window(), THRESHOLDS, spatial="volume")
    with pytest.raises(InvalidSpec):
        build_quadrature(data, DummyPointSpec(), Window(), THRESHOLDS, lambda_w=0.0)


def test_covariates_use_data_only():
    data = np.array([(0.5, 0.5), (0.55, 0.5), (0.5, 0.75)])
    u = np.vstack([data, [(0.52, 0.52), (0.95, 0.05)]])
    cov = quadrature_covariates(u, data, THRESHOLDS)
    for j in range(3):
        others = np.delete(data, j, axis=0)
        assert cov[j].tolist() == (-interaction_covariates(data[j], others, THRESHOLDS)).tolist()
    assert cov[3].tolist() == [-2.0, 0.0, -1.0]
    # a dummy beyond r_k from every data point has no interactions
    assert cov[4].tolist() == [0.0, 0.0, 0.0]


def test_quadrature_errors():
    with pytest.raises(EmptyDiagram):
        build_quadrature(PersistenceDiagram(np.empty((0, 2))), DummyPointSpec(), Window(), THRESHOLDS)
    with pytest.raises(OutOfWindow):
        build_quadrature(PersistenceDiagram([(0.2, 1.4)]), DummyPointSpec(), Window(), THRESHOLDS)


def test_coincident_dummy_is_nudged():
    spec = DummyPointSpec(scheme="grid", grid_size=2)
    Q, tess = build_quadrature(PersistenceDiagram([(0.25, 0.25), (0.7, 0.7)]), spec, Window(), THRESHOLDS)
    assert len(np.unique(Q.u, axis=0)) == Q.m
    assert np.abs(Q.u[2] - np.array([0.25, 0.25])).max() <= 1e-8


def test_pseudolikelihood_at_zero(uniform_scheme):
    Q, _, _ = uniform_scheme
    expected = np.sum((Q.y * Q.offset - np.exp(Q.offset)) * Q.w)
    assert log_pseudolikelihood(np.zeros(3), Q) == pytest.approx(expected, rel=1e-12)


def test_pseudolikelihood_matches_direct_form(uniform_scheme):
    Q, _, _ = uniform_scheme
    rng = np.random.default_rng(0)
    for theta in rng.normal(0, 1, size=(10, 3)):
        assert log_pseudolikelihood(theta, Q) == pytest.approx(log_pseudolikelihood_direct(theta, Q), rel=1e-12)


def test_gradient_matches_finite_differences(uniform_scheme):
    Q, _, _ = uniform_scheme
    rng = np.random.default_rng(1)
    h = 1e-6
    for theta in rng.normal(0, 1, size=(20, 3)):
        fd = np.array([
            (log_pseudolikelihood(theta + h * e, Q) - log_pseudolikelihood(theta - h * e, Q)) / (2 * h)
            for e in np.eye(3)
        ])
        assert np.allclose(pseudolikelihood_gradient(theta, Q), fd, rtol=1e-6, atol=1e-6)


def test_hessian_is_negative_semidefinite(uniform_scheme):
    Q, _, _ = uniform_scheme
    rng = np.random.default_rng(2)
    for theta in rng.normal(0, 1, size=(20, 3)):
        H = pseudolikelihood_hessian(theta, Q)
        assert np.allclose(H, H.T)
        assert np.linalg.eigvalsh(H).max() <= 1e-9 * max(1.0, np.abs(H).max())


def test_fit_agrees_with_generic_optimizer(uniform_scheme):
    Q, _, _ = uniform_scheme
    fit = fit_mple(Q)
    assert fit.converged
    res = minimize(
        lambda t: (-log_pseudolikelihood(t, Q), -pseudolikelihood_gradient(t, Q)),
        np.zeros(3),
        jac=True,
        method="BFGS",
        options={"gtol": 1e-10, "maxiter": 10_000},
    )
    assert np.allclose(fit.theta_hat, res.x, atol=1e-6)
    assert np.abs(pseudolikelihood_gradient(fit.theta_hat, Q)).max() < 1e-6


def test_fit_result_invariants(uniform_scheme):
    Q, _, _ = uniform_scheme
    fit = fit_mple(Q)
    assert np.allclose(fit.covariance, fit.covariance.T)
    assert np.linalg.eigvalsh(fit.covariance).min() >= 0
    half = fit.ci_95[:, 1] - fit.theta_hat
    assert np.allclose(fit.theta_hat - fit.ci_95[:, 0], half)
    assert np.allclose(half, 1.959963984540054 * fit.std_errors)
    assert ((fit.p_values >= 0) & (fit.p_values <= 1)).all()
    assert fit.log_pl == pytest.approx(log_pseudolikelihood(fit.theta_hat, Q))

    table = fit.table()
    assert list(table.columns) == ["parameter", "estimate", "std_error", "ci_low", "ci_high", "p_value"]
    assert table["parameter"].tolist() == ["theta_1", "theta_2", "theta_3"]

    again = FitResult.from_dict(fit.to_dict())
    assert np.array_equal(again.theta_hat, fit.theta_hat)
    assert np.array_equal(again.ci_95, fit.ci_95)

    broken = fit.to_dict()
    del broken["covariance"]
    with pytest.raises(InvalidSpec):
        FitResult.from_dict(broken)
    with pytest.raises(InvalidSpec):
        FitResult.from_dict({**fit.to_dict(), "iterations": "many"})


def test_fit_is_deterministic():
    data = PersistenceDiagram(np.random.default_rng(4).uniform(0.05, 0.95, size=(25, 2)))
    spec = DummyPointSpec(scheme="stratified", grid_size=8, seed=17)
    a = fit_mple(build_quadrature(data, spec, Window(), THRESHOLDS)[0])
    b = fit_mple(build_quadrature(data, spec, Window(), THRESHOLDS)[0])
    assert np.array_equal(a.theta_hat, b.theta_hat)


def test_zero_covariate_column_is_singular():
    # every pair of data points is farther apart than r_1
    data = PersistenceDiagram([(0.2, 0.2), (0.35, 0.2), (0.2, 0.45), (0.8, 0.8)])
    Q, _ = build_quadrature(data, DummyPointSpec(scheme="grid", grid_size=3), Window(), InteractionThresholds([0.01, 0.3]))
    assert not Q.covariates[:, 0].any()
    with pytest.raises(Singular):
        fit_mple(Q)


def test_bin_without_data_pairs_is_singular():
    # pairs at 0.05 and about 0.15 only; dummies still see the third bin
    data = PersistenceDiagram([(0.2, 0.2), (0.25, 0.2), (0.2, 0.35)])
    Q, _ = build_quadrature(data, DummyPointSpec(scheme="grid", grid_size=10), Window(), THRESHOLDS)
    assert Q.covariates[:, 2].any()
    with pytest.raises(Singular, match=r"bin\(s\) \[3\]"):
        fit_mple(Q)


def _steep_scheme():
    return QuadratureScheme(
        u=np.array([[0.2, 0.2], [0.7, 0.7]]),
        w=np.ones(2),
        y=np.array([1.0, 0.0]),
        covariates=np.array([[-1.0], [-20.0]]),
        offset=np.log([0.3, 1e-9]),
        is_data=np.array([True, False]),
    )


def test_rejected_step_stops_the_fit(monkeypatch):
    # the full Newton step from 0 overshoots into the steep dummy term
    monkeypatch.setattr("src.fit.mple.MAX_HALVINGS", 0)
    fit = fit_mple(_steep_scheme())
    assert not fit.converged
    assert fit.iterations == 1
    assert fit.theta_hat.tolist() == [0.0]
    assert fit.log_pl == pytest.approx(log_pseudolikelihood(np.zeros(1), _steep_scheme()))


def test_step_halving_recovers_from_overshoot():
    Q = _steep_scheme()
    fit = fit_mple(Q)
    assert fit.converged
    assert fit.log_pl > log_pseudolikelihood(np.zeros(1), Q)
    assert abs(pseudolikelihood_gradient(fit.theta_hat, Q)[0]) < 1e-6


def test_nonconvergence_is_reported(uniform_scheme):
    Q, _, _ = uniform_scheme
    fit = fit_mple(Q, max_iter=1)
    assert not fit.converged
    assert fit.iterations == 1


def test_quadrature_scheme_validation():
    with pytest.raises(InvalidSpec):
        QuadratureScheme(
            u=np.zeros((2, 2)), w=np.array([0.5, 0.0]), y=np.zeros(2),
            covariates=np.zeros((2, 1)), offset=np.zeros(2), is_data=np.array([True, False]),
        )


@pytest.mark.slow
def test_robustness_study_is_deterministic():
    curve = PolarCurveSpec(n=60, noise_sd=0.1)
    dummy = DummyPointSpec(scheme="grid", grid_size=8)
    a = robustness_study(curve, 3, THRESHOLDS, dummy, seed=5)
    b = robustness_study(curve, 3, THRESHOLDS, dummy, seed=5)
    pd.testing.assert_frame_equal(a.replicates, b.replicates)
    pd.testing.assert_frame_equal(a.summary, b.summary)
    assert a.replicates["replication"].tolist() == [0, 1, 2]
    assert a.summary["parameter"].tolist() == ["theta_1", "theta_2", "theta_3"]
    assert {"theta_1", "p_1", "n_points", "converged", "error"} <= set(a.replicates.columns)


def test_robustness_needs_two_replications():
    with pytest.raises(InvalidSpec):
        robustness_study(PolarCurveSpec(), 1, THRESHOLDS, DummyPointSpec(), seed=0)
