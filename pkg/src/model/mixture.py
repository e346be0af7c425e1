"""
Window-truncated isotropic Gaussian mixtures.
Used both to scatter dummy points and as the relocation proposal density q.
"""
from dataclasses import dataclass
from typing import Any, Dict, Sequence

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

from src.errors import InvalidSpec
from src.geometry.tessellation import Window

MAX_REJECTION_ROUNDS = 1000


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """
    sum_i c_i N(mu_i, sigma_i I_2) restricted to `window`.
    `variances` holds sigma_i, the per-coordinate variance of each component.
    """

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    window: Window

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        means = np.asarray(self.means, dtype=float).reshape(-1, 2)
        variances = np.asarray(self.variances, dtype=float).reshape(-1)
        if not (len(weights) == len(means) == len(variances)) or len(weights) == 0:
            raise InvalidSpec("Mixture weights, means and variances must have the same nonzero length")
        if (weights <= 0).any():
            raise InvalidSpec("Mixture weights must be positive")
        if (variances <= 0).any():
            raise InvalidSpec("Mixture variances must be positive")
        object.__setattr__(self, "weights", weights / weights.sum())
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", variances)
        object.__setattr__(self, "_log_mass", self._window_log_mass())

    def _window_log_mass(self) -> float:
        """log of the mixture probability assigned to the window."""
        sd = np.sqrt(self.variances)
        w = self.window
        px = norm.cdf((w.x_max - self.means[:, 0]) / sd) - norm.cdf((w.x_min - self.means[:, 0]) / sd)
        py = norm.cdf((w.y_max - self.means[:, 1]) / sd) - norm.cdf((w.y_min - self.means[:, 1]) / sd)
        mass = float(np.dot(self.weights, px * py))
        if mass <= 0:
            raise InvalidSpec("Mixture puts no mass on the window")
        return float(np.log(mass))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw `size` points, resampling any draw not strictly inside the window."""
        out = np.empty((0, 2))
        for _ in range(MAX_REJECTION_ROUNDS):
            need = size - len(out)
            if need <= 0:
                return out[:size]
            comp = rng.choice(len(self.weights), size=need, p=self.weights)
            draws = self.means[comp] + rng.normal(size=(need, 2)) * np.sqrt(self.variances[comp])[:, None]
            out = np.vstack([out, draws[self.window.contains(draws, strict=True)]])
        raise InvalidSpec("Mixture rejection sampling kept landing outside the window")

    def sample_one(self, rng: np.random.Generator) -> np.ndarray:
        return self.sample(rng, 1)[0]

    def log_density(self, points) -> np.ndarray:
        """Log density of the truncated mixture at each row of `points`."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        sq = ((pts[:, None, :] - self.means[None, :, :]) ** 2).sum(axis=2)
        log_comp = -np.log(2.0 * np.pi * self.variances)[None, :] - sq / (2.0 * self.variances[None, :])
        return logsumexp(log_comp + np.log(self.weights)[None, :], axis=1) - self._log_mass

    def to_dict(self) -> Dict[str, Any]:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Sequence], window: Window) -> "GaussianMixture":
        return cls(data["weights"], data["means"], data["variances"], window)
