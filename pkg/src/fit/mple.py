"""
Maximum pseudolikelihood estimation as a weighted log-linear Poisson regression.

With eta_j = offset_j + covariates_j . theta and L_j = exp(eta_j), the
quadrature approximation of the log-pseudolikelihood is

    sum_j (y_j eta_j - L_j) w_j

which is fitted by iteratively reweighted least squares. The spatial term
enters as a fixed offset; only the interaction coefficients are estimated.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.stats import norm

from src.errors import InvalidSpec, Singular
from src.fit.quadrature import QuadratureScheme

logger = logging.getLogger(__name__)

Z_95 = float(norm.ppf(0.975))
MAX_COND = 1e14
MAX_HALVINGS = 40
LL_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class FitResult:
    theta_hat: np.ndarray
    covariance: np.ndarray
    ci_95: np.ndarray
    p_values: np.ndarray
    log_pl: float
    converged: bool
    iterations: int

    @property
    def std_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))

    @property
    def names(self) -> List[str]:
        return [f"theta_{l + 1}" for l in range(len(self.theta_hat))]

    def table(self) -> pd.DataFrame:
        """Coefficient table: estimate, 95% Wald interval and p value."""
        return pd.DataFrame({
            "parameter": self.names,
            "estimate": self.theta_hat,
            "std_error": self.std_errors,
            "ci_low": self.ci_95[:, 0],
            "ci_high": self.ci_95[:, 1],
            "p_value": self.p_values,
        })

    def to_dict(self) -> Dict[str, Any]:
        return {
            "theta_hat": self.theta_hat.tolist(),
            "covariance": self.covariance.tolist(),
            "ci_95": self.ci_95.tolist(),
            "p_values": self.p_values.tolist(),
            "log_pl": self.log_pl,
            "converged": self.converged,
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FitResult":
        try:
            return cls(
                theta_hat=np.asarray(data["theta_hat"], dtype=float),
                covariance=np.asarray(data["covariance"], dtype=float),
                ci_95=np.asarray(data["ci_95"], dtype=float).reshape(-1, 2),
                p_values=np.asarray(data["p_values"], dtype=float),
                log_pl=float(data["log_pl"]),
                converged=bool(data["converged"]),
                iterations=int(data["iterations"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpec(f"Malformed fit description: {exc!r}") from exc


def _linear_predictor(theta, Q: QuadratureScheme) -> np.ndarray:
    return Q.offset + Q.covariates @ np.asarray(theta, dtype=float)


def log_pseudolikelihood(theta, Q: QuadratureScheme) -> float:
    eta = _linear_predictor(theta, Q)
    return float(np.sum((Q.y * eta - np.exp(eta)) * Q.w))


def log_pseudolikelihood_direct(theta, Q: QuadratureScheme) -> float:
    """Two-term form: sum of ln L over the data minus the quadrature integral."""
    eta = _linear_predictor(theta, Q)
    return float(eta[Q.is_data].sum() - np.sum(np.exp(eta) * Q.w))


def pseudolikelihood_gradient(theta, Q: QuadratureScheme) -> np.ndarray:
    eta = _linear_predictor(theta, Q)
    return Q.covariates.T @ (Q.w * (Q.y - np.exp(eta)))


def pseudolikelihood_hessian(theta, Q: QuadratureScheme) -> np.ndarray:
    eta = _linear_predictor(theta, Q)
    return -(Q.covariates.T * (Q.w * np.exp(eta))) @ Q.covariates


def _fisher_information(theta, Q: QuadratureScheme) -> np.ndarray:
    return -pseudolikelihood_hessian(theta, Q)


def fit_mple(Q: QuadratureScheme, max_iter: int = 100, tol: float = 1e-8) -> FitResult:
    """
    Fit the interaction coefficients by IRLS.

    Each iteration solves the weighted least-squares normal equations
    (X' W X) delta = X' w (y - L) with working weights W = w L, halving the
    step while the pseudolikelihood decreases. Converged when max |delta| < tol.
    A step that still lowers the pseudolikelihood after MAX_HALVINGS halvings
    is rejected and the fit stops there with converged=False, as does a run
    that hits max_iter.

    Raises Singular for an all-zero covariate column, for a bin holding no pair
    of data points (its coefficient runs off to +inf) and for a singular
    information matrix.
    """
    X = Q.covariates
    empty = ~X.any(axis=0)
    if empty.any():
        raise Singular(f"Covariate column(s) {np.flatnonzero(empty).tolist()} are identically zero")
    no_pairs = ~X[Q.is_data].any(axis=0)
    if no_pairs.any():
        raise Singular(f"No pair of data points falls in bin(s) {(np.flatnonzero(no_pairs) + 1).tolist()}")

    theta = np.zeros(Q.k)
    ll = log_pseudolikelihood(theta, Q)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        info = _fisher_information(theta, Q)
        score = pseudolikelihood_gradient(theta, Q)
        try:
            delta = linalg.solve(info, score, assume_a="sym")
        except linalg.LinAlgError as exc:
            raise Singular(f"Fisher information not invertible at iteration {iterations}") from exc

        new_theta = theta + delta
        new_ll = log_pseudolikelihood(new_theta, Q)
        halvings = 0
        while not new_ll >= ll and halvings < MAX_HALVINGS:
            delta = delta / 2.0
            new_theta = theta + delta
            new_ll = log_pseudolikelihood(new_theta, Q)
            halvings += 1
        # drops at rounding level near the optimum count as no change
        if not new_ll >= ll - LL_SLACK * max(1.0, abs(ll)):
            logger.warning("Step halving failed to raise the pseudolikelihood at iteration %d", iterations)
            break

        change = float(np.max(np.abs(new_theta - theta)))
        theta, ll = new_theta, new_ll
        if change < tol:
            converged = True
            break

    if not converged:
        logger.warning("IRLS stopped after %d iterations without converging", iterations)

    info = _fisher_information(theta, Q)
    if not np.isfinite(info).all() or np.linalg.cond(info) > MAX_COND:
        raise Singular("Fisher information is singular at the estimate")
    covariance = linalg.inv(info)
    covariance = (covariance + covariance.T) / 2.0
    se = np.sqrt(np.diag(covariance))
    z = theta / se
    result = FitResult(
        theta_hat=theta,
        covariance=covariance,
        ci_95=np.column_stack([theta - Z_95 * se, theta + Z_95 * se]),
        p_values=2.0 * norm.sf(np.abs(z)),
        log_pl=ll,
        converged=converged,
        iterations=iterations,
    )
    logger.info(
        "MPLE theta=%s (converged=%s, %d iterations), fitted intensity mass %.3g for %d data points",
        np.round(theta, 4).tolist(), converged, iterations,
        float(np.sum(Q.w * np.exp(_linear_predictor(theta, Q)))), Q.n_data,
    )
    return result
