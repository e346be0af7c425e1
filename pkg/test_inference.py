"""
Tests for the order statistics, the one-sided intervals and the sequential test.
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pandas as pd
import pytest

from src.errors import EmptyDiagram, EmptySampleSet, InvalidSpec
from src.homology.diagram import PersistenceDiagram
from src.inference.order_statistics import (
    REPORT_COLUMNS,
    OrderStatSample,
    exceedance_probability,
    one_sided_ci,
    order_statistics,
    ranked_persistences,
    sequential_test,
)


def diagram(*persistences):
    return PersistenceDiagram([(0.1 * (k + 1), p) for k, p in enumerate(persistences)])


def brute_force_a(values, o_org, alpha):
    """Smallest candidate a >= 0 whose strict exceedance count stays within alpha * N."""
    allowed = int(np.floor(alpha * len(values) + 1e-9))
    candidates = sorted({0.0} | {float(v - o_org) for v in values if v >= o_org})
    return min(a for a in candidates if np.count_nonzero(values > o_org + a) <= allowed)


def test_ranked_persistences_are_zero_padded():
    assert ranked_persistences([(0.1, 0.5), (0.2, 0.3)], 3).tolist() == [0.5, 0.3, 0.0]
    assert ranked_persistences(np.empty((0, 2)), 2).tolist() == [0.0, 0.0]
    assert ranked_persistences([(0.1, 0.2), (0.3, 0.9), (0.2, 0.4)], 2).tolist() == [0.9, 0.4]


def test_order_statistics():
    stats = order_statistics([diagram(0.5, 0.25), diagram(0.75), diagram()], 2)
    assert [s.i for s in stats] == [1, 2]
    assert stats[0].values.tolist() == [0.5, 0.75, 0.0]
    assert stats[1].values.tolist() == [0.25, 0.0, 0.0]
    assert stats[0].estimate == pytest.approx(1.25 / 3)
    with pytest.raises(EmptySampleSet):
        order_statistics([], 3)
    with pytest.raises(InvalidSpec):
        order_statistics([diagram(0.5)], 0)


def test_one_sided_ci_example():
    sample = OrderStatSample(1, np.arange(1, 21) / 8)
    a, upper = one_sided_ci(sample, 1.0, 0.1)
    # two exceedances allowed out of twenty: the bound sits at the third largest value
    assert a == 1.25
    assert upper == pytest.approx(sample.estimate + 1.25)


def test_one_sided_ci_edge_cases():
    sample = OrderStatSample(1, np.arange(1, 21) / 8)
    assert one_sided_ci(sample, 1.0, 1.0)[0] == 0.0
    assert one_sided_ci(sample, 3.0, 0.05)[0] == 0.0
    # no exceedance allowed: the bound reaches the sample maximum
    assert one_sided_ci(sample, 1.0, 0.01)[0] == 1.5
    with pytest.raises(InvalidSpec):
        one_sided_ci(sample, 1.0, 0.0)
    with pytest.raises(InvalidSpec):
        one_sided_ci(sample, 1.0, 1.5)
    with pytest.raises(EmptySampleSet):
        one_sided_ci(OrderStatSample(1, np.array([])), 1.0, 0.05)


def test_one_sided_ci_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(500):
        values = rng.integers(0, 17, size=int(rng.integers(1, 41))) / 8
        o_org = int(rng.integers(0, 17)) / 8
        alpha = float(rng.choice([0.01, 0.05, 0.1, 0.25, 0.5]))
        a, _ = one_sided_ci(OrderStatSample(1, values), o_org, alpha)
        assert a == brute_force_a(values, o_org, alpha)


def test_interval_shrinks_as_alpha_grows():
    rng = np.random.default_rng(1)
    sample = OrderStatSample(1, rng.gamma(2.0, 0.1, size=200))
    widths = [one_sided_ci(sample, 0.1, alpha)[0] for alpha in (0.01, 0.05, 0.1, 0.2, 0.5)]
    assert all(x >= y for x, y in zip(widths, widths[1:]))


def test_exceedance_probability_is_strict():
    sample = OrderStatSample(1, np.array([0.5, 0.5, 1.0]))
    assert exceedance_probability(sample, 0.5) == pytest.approx(1 / 3)
    assert exceedance_probability(sample, 1.0) == 0.0
    assert exceedance_probability(sample, 0.0) == 1.0


def test_sequential_test_stops_at_first_failure():
    samples = [diagram(0.25, 0.25) for _ in range(20)]
    original = diagram(1.0, 0.125, 0.0625)
    report = sequential_test(samples, original, alpha=0.05, max_rank=4)
    table = report.table
    assert list(table.columns) == REPORT_COLUMNS
    assert table["rank"].tolist() == [1, 2, 3, 4]
    assert table["original"].tolist() == [1.0, 0.125, 0.0625, 0.0]
    assert table["a"].tolist() == [0.0, 0.125, 0.0, 0.0]
    assert table["ci_upper"].tolist() == [0.25, 0.375, 0.0, 0.0]
    assert table["p_value"].tolist() == [0.0, 1.0, 0.0, 0.0]
    # rank 3 clears its bound but is never tested
    assert table["tested"].tolist() == [True, True, False, False]
    assert table["significant"].tolist() == [True, False, False, False]
    assert report.significant_ranks == [1]


def test_sequential_test_errors():
    with pytest.raises(EmptyDiagram):
        sequential_test([diagram(0.5)], PersistenceDiagram(np.empty((0, 2))))
    with pytest.raises(EmptySampleSet):
        sequential_test([], diagram(0.5))


def test_report_output(tmp_path):
    report = sequential_test([diagram(0.25) for _ in range(10)], diagram(1.0), alpha=0.05, max_rank=2)
    report.to_csv(tmp_path / "report.csv")
    again = pd.read_csv(tmp_path / "report.csv")
    assert list(again.columns) == REPORT_COLUMNS
    assert again["significant"].tolist() == [True, False]
    text = report.to_text()
    assert text.startswith("One-sided 95% intervals")
    assert "[0, 0.2500]" in text
