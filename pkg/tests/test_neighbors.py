import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from brdad.neighbors import (
    NeighborIndex,
    average_i_distances,
    brute_force_knn,
    build_index,
    knn_distances,
)

from _oracles import brute_profile

REFS = np.array([[0.0], [1.0], [3.0]])


def test_build_small():
    idx = build_index(REFS)
    assert idx.s == 3 and idx.d == 1


def test_single_point_index(backend):
    idx = build_index([[2.0, -1.0]])
    d, i = knn_distances(idx, [0.0, 0.0], 1, return_indices=True, backend=backend)
    np.testing.assert_allclose(d, [np.sqrt(5.0)])
    assert i.tolist() == [0]


def test_empty_index_rejected():
    with pytest.raises(ValueError):
        build_index(np.empty((0, 2)))


def test_hand_example_two_neighbours(backend):
    d, i = knn_distances(build_index(REFS), [0.5], 2, return_indices=True, backend=backend)
    assert d.tolist() == [0.5, 0.5]
    assert i.tolist() == [0, 1]
    assert brute_force_knn(REFS, [0.5], 2).tolist() == [0.5, 0.5]


def test_hand_example_exclusion(backend):
    assert knn_distances(build_index(REFS), [0.0], 1, exclude=0, backend=backend).tolist() == [1.0]


def test_query_on_reference_point(backend):
    assert knn_distances(build_index(REFS), [3.0], 1, backend=backend)[0] == 0.0


def test_full_list_brute_force():
    assert brute_force_knn(REFS, [0.0], 3).tolist() == [0.0, 1.0, 3.0]


@pytest.mark.parametrize("k, exclude", [(4, None), (3, 1), (0, None)])
def test_k_out_of_range(k, exclude, backend):
    with pytest.raises(ValueError):
        knn_distances(build_index(REFS), [0.0], k, exclude=exclude, backend=backend)
    with pytest.raises(ValueError):
        brute_force_knn(REFS, [0.0], k, exclude=exclude)


def _instances(rng, count, max_s, max_d):
    for t in range(count):
        s = int(rng.integers(1, max_s + 1))
        d = int(rng.integers(1, max_d + 1))
        if t % 3 == 0:
            refs = rng.integers(0, 3, size=(s, d)).astype(float)  # heavy ties
        else:
            refs = rng.standard_normal((s, d))
        yield refs


def test_oracle_equivalence_both_backends(rng, backend):
    for refs in _instances(rng, 120, 300, 8):
        s = refs.shape[0]
        idx = build_index(refs)
        queries = np.vstack([refs[rng.integers(0, s, 3)], rng.standard_normal((3, refs.shape[1]))])
        for q in queries:
            k = int(rng.integers(1, s + 1))
            d1, i1 = knn_distances(idx, q, k, return_indices=True, backend=backend)
            d2, i2 = brute_force_knn(refs, q, k, return_indices=True)
            assert np.array_equal(d1, d2) and np.array_equal(i1, i2)
            if s > 1:
                ex = int(rng.integers(0, s))
                k = int(rng.integers(1, s))
                d1, i1 = knn_distances(idx, q, k, exclude=ex, return_indices=True, backend=backend)
                d2, i2 = brute_force_knn(refs, q, k, exclude=ex, return_indices=True)
                assert np.array_equal(d1, d2) and np.array_equal(i1, i2)
                assert ex not in i1


def test_backends_agree_on_batches(rng):
    from brdad.neighbors import available_backends

    if "compiled" not in available_backends():
        pytest.skip("compiled kernel not built")
    refs = rng.random((700, 4))
    idx = build_index(refs)
    q = rng.random((300, 4))
    excl = rng.integers(-1, 700, 300)
    a = idx.query(q, 25, exclude=excl, backend="compiled")
    b = idx.query(q, 25, exclude=excl, backend="python")
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    w = rng.dirichlet(np.ones(25))
    assert np.array_equal(idx.weighted_k_distance(q, w, excl, backend="compiled"),
                          idx.weighted_k_distance(q, w, excl, backend="python"))


def test_threads_do_not_change_results(rng):
    refs = rng.random((3000, 3))
    idx = build_index(refs)
    q = rng.random((9000, 3))
    a = idx.query(q, 7, threads=1)
    b = idx.query(q, 7, threads=4)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_large_index_spot_checks(rng):
    refs = rng.random((10_000, 8))
    idx = build_index(refs)
    for q in rng.random((20, 8)):
        d1, i1 = knn_distances(idx, q, 15, return_indices=True)
        d2, i2 = brute_force_knn(refs, q, 15, return_indices=True)
        assert np.array_equal(d1, d2) and np.array_equal(i1, i2)


@given(
    arrays(np.float64, st.tuples(st.integers(2, 40), st.integers(1, 4)), elements=st.floats(-100, 100)),
    arrays(np.float64, 4, elements=st.floats(-50, 50)),
)
@settings(max_examples=80, deadline=None)
def test_translation_invariance(refs, shift):
    shift = shift[: refs.shape[1]]
    q = refs[0] + 0.37
    k = refs.shape[0]
    a = knn_distances(build_index(refs), q, k)
    b = knn_distances(build_index(refs + shift), q + shift, k)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


def test_average_i_distances_hand_example():
    np.testing.assert_allclose(average_i_distances([[0.0], [1.0], [3.0]]), [4 / 3, 8 / 3], rtol=1e-15)


def test_average_i_distances_degenerate():
    assert average_i_distances([[2.0], [2.0]]).tolist() == [0.0]
    assert average_i_distances([[0.0], [10.0]]).tolist() == [10.0]
    with pytest.raises(ValueError):
        average_i_distances([[1.0]])


def test_average_i_distances_truncation_is_prefix(rng):
    pts = rng.random((150, 3))
    full = average_i_distances(pts)
    assert full.shape == (149,)
    assert np.array_equal(average_i_distances(pts, max_rank=40), full[:40])
    np.testing.assert_allclose(full, brute_profile(pts), rtol=1e-12)


@given(arrays(np.float64, st.tuples(st.integers(2, 30), st.integers(1, 3)),
              elements=st.floats(-10, 10)))
@settings(max_examples=100, deadline=None)
def test_average_profile_non_decreasing(pts):
    prof = average_i_distances(pts)
    assert np.all(np.diff(prof) >= 0)
