import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brdad.data import (
    BagPartition,
    DataError,
    Dataset,
    LabeledDataset,
    apply_scale,
    auto_bag_count,
    fit_scale,
    load_csv,
    make_partition,
    write_csv,
)


def test_load_csv_plain(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("a,b,c\n1,2,3\n4,5.5,-6e-1\n")
    ds = load_csv(p)
    assert isinstance(ds, Dataset)
    assert (ds.n, ds.d) == (2, 3)
    np.testing.assert_array_equal(ds.points, [[1, 2, 3], [4, 5.5, -0.6]])


def test_load_csv_label_column(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("x1,y,x2\n0.1,0,0.2\n0.3,1,0.4\n0.5,0,0.6\n")
    ld = load_csv(p, label_column="y")
    assert isinstance(ld, LabeledDataset)
    assert ld.d == 2
    np.testing.assert_array_equal(ld.labels, [0, 1, 0])
    np.testing.assert_array_equal(ld.data.points[:, 1], [0.2, 0.4, 0.6])


def test_load_csv_bad_cell_names_location(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("a,b\n1,2\n3,abc\n")
    with pytest.raises(DataError, match=r"'abc'.*row 3.*column 'b'"):
        load_csv(p)


@pytest.mark.parametrize("text", ["", "a,b\n"])
def test_load_csv_empty(tmp_path, text):
    p = tmp_path / "a.csv"
    p.write_text(text)
    with pytest.raises(DataError):
        load_csv(p)


def test_load_csv_rejects_nan(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("a\nnan\n")
    with pytest.raises(DataError):
        load_csv(p)


def test_csv_round_trip(tmp_path, rng):
    pts = rng.standard_normal((17, 3))
    labels = rng.integers(0, 2, 17)
    write_csv(tmp_path / "r.csv", pts, labels)
    back = load_csv(tmp_path / "r.csv", "y")
    np.testing.assert_array_equal(back.data.points, pts)
    np.testing.assert_array_equal(back.labels, labels)


def test_dataset_is_immutable():
    ds = Dataset([[1.0], [2.0]])
    with pytest.raises(ValueError):
        ds.points[0, 0] = 5.0


@pytest.mark.parametrize(
    "column, expected",
    [
        ([0.0, 10.0], [0.0, 1.0]),
        ([7.0, 7.0], [0.5, 0.5]),
        ([-1.0, 0.0, 3.0], [0.0, 0.25, 1.0]),
    ],
)
def test_scale_examples(column, expected):
    ds = Dataset(np.array(column).reshape(-1, 1))
    out = apply_scale(fit_scale(ds), ds)
    np.testing.assert_allclose(out.points[:, 0], expected, rtol=0, atol=1e-15)


@given(st.lists(st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=3), min_size=1, max_size=40))
@settings(max_examples=100, deadline=None)
def test_scale_maps_training_into_unit_cube(rows):
    ds = Dataset(np.array(rows))
    out = fit_scale(ds).apply(ds).points
    assert np.all(out >= -1e-12) and np.all(out <= 1 + 1e-12)


def test_scale_applies_to_new_points_outside_cube():
    t = fit_scale(Dataset([[0.0], [1.0]]))
    np.testing.assert_allclose(t.apply(np.array([[2.0], [-1.0]])).points[:, 0], [2.0, -1.0])


@pytest.mark.parametrize(
    "n, B, sizes",
    [
        (10, 2, [(2, 3), (2, 3)]),
        (12, 3, [(2, 2), (2, 2), (2, 2)]),
        (11, 2, [(3, 3), (2, 3)]),
    ],
)
def test_partition_sizes(n, B, sizes):
    part = make_partition(n, B, rng_seed=4)
    assert [(len(f), len(r)) for f, r in part.pairs] == sizes


def test_partition_too_small():
    with pytest.raises(ValueError):
        make_partition(7, 2, 0)


@given(n=st.integers(4, 400), B=st.integers(1, 25), seed=st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_partition_properties(n, B, seed):
    if n < 4 * B:
        with pytest.raises(ValueError):
            make_partition(n, B, seed)
        return
    part = make_partition(n, B, seed)
    lists = [x for pair in part.pairs for x in pair]
    allidx = np.concatenate(lists)
    assert len(np.unique(allidx)) == allidx.size <= n
    assert all(len(x) >= 2 for x in lists)
    assert all(abs(len(f) - len(r)) <= 1 for f, r in part.pairs)
    totals = [len(f) + len(r) for f, r in part.pairs]
    assert max(totals) - min(totals) <= 1
    again = make_partition(n, B, seed)
    assert all(np.array_equal(a, b) for a, b in zip(lists, [x for p in again.pairs for x in p]))


def test_partition_json_round_trip():
    part = make_partition(30, 3, 1)
    back = BagPartition.from_dict(part.to_dict())
    for (f1, r1), (f2, r2) in zip(part.pairs, back.pairs):
        np.testing.assert_array_equal(f1, f2)
        np.testing.assert_array_equal(r1, r2)


@pytest.mark.parametrize(
    "n, B", [(5000, 1), (10000, 1), (10001, 5), (20000, 5), (50000, 5), (50001, 10), (60000, 10)]
)
def test_auto_bag_count(n, B):
    assert auto_bag_count(n) == B
