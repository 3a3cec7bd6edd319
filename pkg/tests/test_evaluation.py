import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brdad.evaluation import MetricReport, auc, mae, pairwise_auc, rank_table


@pytest.mark.parametrize(
    "scores, labels, expected",
    [([3, 2, 1], [1, 0, 0], 1.0), ([1, 2, 3], [1, 0, 0], 0.0), ([5, 5, 5, 5], [1, 0, 1, 0], 0.5)],
)
def test_auc_examples(scores, labels, expected):
    assert auc(scores, labels) == expected


def test_auc_single_class():
    with pytest.raises(ValueError):
        auc([1, 2], [0, 0])


labelled = st.integers(2, 300).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 20).map(float), min_size=n, max_size=n),
        st.lists(st.integers(0, 1), min_size=n, max_size=n),
    )
).filter(lambda t: 0 < sum(t[1]) < len(t[1]))


@given(labelled)
@settings(max_examples=200, deadline=None)
def test_auc_matches_pairwise_definition(case):
    s, y = case
    assert auc(s, y) == pytest.approx(pairwise_auc(s, y), abs=1e-12)


@given(labelled)
@settings(max_examples=100, deadline=None)
def test_auc_monotone_invariance(case):
    s, y = np.array(case[0]), case[1]
    base = auc(s, y)
    assert abs(auc(np.exp(s / 10), y) - base) <= 1e-12
    assert abs(auc(3.0 * s - 7.0, y) - base) <= 1e-12


def test_auc_complement_without_ties(rng):
    s = rng.standard_normal(500)
    y = (rng.random(500) < 0.2).astype(int)
    assert auc(s, y) + auc(-s, y) == pytest.approx(1.0, abs=1e-12)


def test_mae_examples():
    assert mae([1, 2, 3], [1, 2, 3]) == 0.0
    assert mae([1, 2], [0, 0]) == 1.5
    truth = np.zeros(10_000)
    est = np.where(np.arange(10_000) % 2 == 0, 0.1, -0.1)
    assert mae(est, truth) == pytest.approx(0.1, abs=1e-15)
    with pytest.raises(ValueError):
        mae([1.0], [1.0, 2.0])


def test_rank_table_examples():
    _, sums = rank_table({"d1": {"A": 0.9, "B": 0.8}, "d2": {"A": 0.7, "B": 0.6}})
    assert sums == {"A": 2.0, "B": 4.0}
    ranks, _ = rank_table({"d1": {"A": 0.9, "B": 0.9}})
    assert ranks["d1"] == {"A": 1.5, "B": 1.5}
    _, sums = rank_table({"d": {"x": 0.9, "y": 0.8, "z": 0.7}})
    assert list(sums.values()) == [1.0, 2.0, 3.0]


def test_rank_table_missing_cell():
    with pytest.raises(ValueError):
        rank_table({"d1": {"A": 0.9, "B": 0.8}, "d2": {"A": 0.7}}, ["A", "B"])


def test_metric_report_json_and_ranges():
    r = MetricReport(n=10, d=2, B=1, seed=0, auc=0.75, mae=0.1, sr=0.2)
    assert json.loads(r.to_json())["auc"] == 0.75
    with pytest.raises(ValueError):
        MetricReport(n=10, d=2, B=1, seed=0, auc=1.5)
    with pytest.raises(ValueError):
        MetricReport(n=10, d=2, B=1, seed=0, mae=-1.0)
