"""
Acceptance ratios of the three RJ-MCMC moves on a persistence diagram.

All ratios are formed in log space. The `log_ratio_*` functions return the raw
(unclipped) log ratio and skip window checks; the `acc_*` functions validate
their inputs and return the acceptance probability exp(min(0, log R)).

Addition and removal share `_log_birth_term`, so for D' = D + {d*} the raw
log ratios of adding d* to D and removing it from D' are exact negatives.
"""
from dataclasses import dataclass
from typing import Dict

import numpy as np

from src.errors import EmptyDiagram, InvalidSpec
from src.model.mixture import GaussianMixture
from src.model.pcpi import PcpiModel

ADD = "add"
REMOVE = "remove"
RELOCATE = "relocate"
MOVES = (ADD, REMOVE, RELOCATE)

# Relocation proposals share the dummy-point mixture type.
ProposalMixture = GaussianMixture


@dataclass(frozen=True)
class MoveProbabilities:
    p_a: float = 0.35
    p_r: float = 0.35
    p_m: float = 0.3

    def __post_init__(self):
        probs = (self.p_a, self.p_r, self.p_m)
        if any(p < 0 or p > 1 for p in probs):
            raise InvalidSpec(f"Move probabilities must lie in [0, 1], got {probs}")
        if abs(sum(probs) - 1.0) > 1e-12:
            raise InvalidSpec(f"Move probabilities must sum to 1, got {sum(probs)!r}")

    def choose(self, u: float) -> str:
        """Move type for a uniform draw u in [0, 1)."""
        if u < self.p_a:
            return ADD
        if u < self.p_a + self.p_r:
            return REMOVE
        return RELOCATE

    @classmethod
    def relocation_only(cls) -> "MoveProbabilities":
        return cls(0.0, 0.0, 1.0)

    @classmethod
    def birth_death(cls, p_a: float = 0.5) -> "MoveProbabilities":
        return cls(p_a, 1.0 - p_a, 0.0)

    def to_dict(self) -> Dict[str, float]:
        return {"p_a": self.p_a, "p_r": self.p_r, "p_m": self.p_m}


def _as_points(D) -> np.ndarray:
    return np.asarray(getattr(D, "points", D), dtype=float).reshape(-1, 2)


def _without(points: np.ndarray, i: int) -> np.ndarray:
    return np.delete(points, i, axis=0)


def _log_birth_term(x: np.ndarray, others: np.ndarray, model: PcpiModel) -> float:
    return model.local_log_intensity(x, others) + np.log(model.lambda_w)


def log_ratio_add(D, d_star, model: PcpiModel) -> float:
    """ln[ prod_i h(d_i, d*) s(d*) lambda_W / (|D| + 1) ]"""
    points = _as_points(D)
    x = np.asarray(d_star, dtype=float).reshape(2)
    return _log_birth_term(x, points, model) - np.log(len(points) + 1)


def log_ratio_remove(D, i: int, model: PcpiModel) -> float:
    """ln[ |D| / (prod_{j != i} h(d_j, d_i) s(d_i) lambda_W) ]"""
    points = _as_points(D)
    return np.log(len(points)) - _log_birth_term(points[i], _without(points, i), model)


def _log_target_over_proposal(x: np.ndarray, others: np.ndarray, model: PcpiModel, q) -> float:
    return model.local_log_intensity(x, others) - float(q.log_density(x)[0])


def log_ratio_relocate(D, i: int, d_star, model: PcpiModel, q) -> float:
    """ln[ s(d*) g(D*) q(d_i) / (s(d_i) g(D) q(d*)) ]; only terms involving the moved point survive."""
    points = _as_points(D)
    others = _without(points, i)
    x = np.asarray(d_star, dtype=float).reshape(2)
    return _log_target_over_proposal(x, others, model, q) - _log_target_over_proposal(points[i], others, model, q)


def acceptance(log_r: float) -> float:
    return float(np.exp(min(0.0, log_r)))


def _check_index(points: np.ndarray, i: int) -> None:
    if len(points) == 0:
        raise EmptyDiagram("No point to move in an empty diagram")
    if not 0 <= i < len(points):
        raise InvalidSpec(f"Point index {i} out of range for a diagram of {len(points)} points")


def acc_relocate(D, i: int, d_star, model: PcpiModel, q) -> float:
    points = model.check_inside(_as_points(D))
    _check_index(points, i)
    return acceptance(log_ratio_relocate(points, i, model.check_inside(d_star)[0], model, q))


def acc_add(D, d_star, model: PcpiModel) -> float:
    points = model.check_inside(_as_points(D))
    return acceptance(log_ratio_add(points, model.check_inside(d_star)[0], model))


def acc_remove(D, i: int, model: PcpiModel) -> float:
    points = model.check_inside(_as_points(D))
    _check_index(points, i)
    return acceptance(log_ratio_remove(points, i, model))
