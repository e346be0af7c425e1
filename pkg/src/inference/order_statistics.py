"""
Order-statistic significance tests for persistence diagrams.

For rank i, O_i is the i-th largest persistence of a diagram (0 when the
diagram has fewer than i points). The sampled diagrams give an empirical null
distribution of O_i; the observed value is significant when it exceeds the
one-sided bound Ô_i + a_i. Ranks are tested in order and testing stops at the
first rank that is not significant.
"""
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd

from src.errors import EmptyDiagram, EmptySampleSet, InvalidSpec

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["rank", "original", "estimate", "a", "ci_upper", "p_value", "significant", "tested"]


@dataclass(frozen=True, eq=False)
class OrderStatSample:
    i: int
    values: np.ndarray

    @property
    def estimate(self) -> float:
        return float(np.mean(self.values))


def ranked_persistences(points, max_rank: int) -> np.ndarray:
    """O_1..O_max_rank of one diagram, zero-padded."""
    p = np.sort(np.asarray(points, dtype=float).reshape(-1, 2)[:, 1])[::-1][:max_rank]
    return np.pad(p, (0, max_rank - len(p)))


def order_statistics(samples, max_rank: int) -> List[OrderStatSample]:
    """`samples` is a SampleSet or any sequence of diagrams."""
    diagrams: Sequence = getattr(samples, "diagrams", samples)
    if len(diagrams) == 0:
        raise EmptySampleSet("No sampled diagrams to summarise")
    if max_rank < 1:
        raise InvalidSpec(f"max_rank must be at least 1, got {max_rank}")
    table = np.vstack([ranked_persistences(getattr(d, "points", d), max_rank) for d in diagrams])
    return [OrderStatSample(i=r + 1, values=table[:, r]) for r in range(max_rank)]


def one_sided_ci(sample: OrderStatSample, o_org: float, alpha: float) -> Tuple[float, float]:
    """
    a_i = inf{a >= 0 : #{v >= o_org + a} / N <= alpha} over the empirical sample.
    With K the largest count allowed by alpha, the infimum is 0 when at most K
    values reach o_org, otherwise v_(K+1) - o_org for the values in decreasing order.
    Returns (a_i, Ô_i + a_i).
    """
    if not 0.0 < alpha <= 1.0:
        raise InvalidSpec(f"alpha must lie in (0, 1], got {alpha}")
    values = np.sort(np.asarray(sample.values, dtype=float))[::-1]
    n = len(values)
    if n == 0:
        raise EmptySampleSet(f"Rank {sample.i} has no sampled values")
    allowed = int(np.floor(alpha * n + 1e-9))
    if np.count_nonzero(values >= o_org) <= allowed:
        a = 0.0
    else:
        a = float(values[allowed] - o_org)
    return a, sample.estimate + a


def exceedance_probability(sample: OrderStatSample, o_org: float) -> float:
    """P_i: share of sampled values strictly above the observed one."""
    return float(np.mean(np.asarray(sample.values) > o_org))


@dataclass(frozen=True, eq=False)
class InferenceReport:
    table: pd.DataFrame
    alpha: float

    @property
    def significant_ranks(self) -> List[int]:
        return self.table.loc[self.table["significant"], "rank"].astype(int).tolist()

    def to_csv(self, path) -> None:
        self.table.to_csv(path, index=False)

    def to_text(self) -> str:
        shown = self.table.copy()
        shown["ci"] = [f"[0, {u:.4f}]" for u in shown["ci_upper"]]
        shown = shown[["rank", "original", "ci", "p_value", "significant", "tested"]]
        return f"One-sided {1 - self.alpha:.0%} intervals\n" + shown.to_string(index=False, float_format="%.4f")


def sequential_test(samples, original, alpha: float = 0.05, max_rank: int = 5) -> InferenceReport:
    original_points = np.asarray(getattr(original, "points", original), dtype=float).reshape(-1, 2)
    if len(original_points) == 0:
        raise EmptyDiagram("The observed diagram has no points to test")
    observed = ranked_persistences(original_points, max_rank)

    rows = []
    testing = True
    for sample in order_statistics(samples, max_rank):
        o_org = float(observed[sample.i - 1])
        a, upper = one_sided_ci(sample, o_org, alpha)
        significant = testing and o_org > upper
        rows.append({
            "rank": sample.i,
            "original": o_org,
            "estimate": sample.estimate,
            "a": a,
            "ci_upper": upper,
            "p_value": exceedance_probability(sample, o_org),
            "significant": bool(significant),
            "tested": testing,
        })
        if testing and not significant:
            testing = False

    report = InferenceReport(pd.DataFrame(rows, columns=REPORT_COLUMNS), alpha)
    logger.info("Significant ranks at alpha=%g: %s", alpha, report.significant_ranks)
    return report
