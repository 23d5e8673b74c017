import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distnn.core import Dataset
from distnn.neighbors import NeighborIndex, brute_knn, order_neighbors, order_neighbors_tree

from conftest import random_dataset


def sort_oracle(X, x, m):
    """Plain Python sort on (squared distance, index)."""
    keys = []
    for i, row in enumerate(X):
        d2 = 0.0
        for a, b in zip(x, row):
            d2 += (a - b) * (a - b)
        keys.append((d2, i))
    keys.sort()
    return [i for _, i in keys[:m]]


def test_trivial_1d():
    ds = Dataset(np.array([[0.0], [1.0], [10.0]]), [0, 1, 0])
    assert order_neighbors(ds, [0.4], 2).indices.tolist() == [0, 1]


def test_duplicate_points_lower_index_first():
    ds = Dataset(np.array([[5.0], [1.0], [1.0], [1.0]]), [0, 1, 0, 1])
    assert order_neighbors(ds, [1.0], 3).indices.tolist() == [1, 2, 3]
    assert order_neighbors_tree(ds, [1.0], 2).indices.tolist() == [1, 2]


def test_full_ordering_matches_sort(rng):
    ds = random_dataset(rng, 50, 3)
    x = rng.standard_normal(3)
    assert order_neighbors(ds, x, 50).indices.tolist() == sort_oracle(ds.X, x, 50)
    assert order_neighbors_tree(ds, x, 50).indices.tolist() == sort_oracle(ds.X, x, 50)


def test_single_point():
    ds = Dataset(np.array([[2.0, 3.0]]), [1])
    assert order_neighbors_tree(ds, [0.0, 0.0], 1).indices.tolist() == [0]


@pytest.mark.parametrize("m", [0, 4])
def test_m_out_of_range(m):
    ds = Dataset(np.zeros((3, 1)), [0, 1, 0])
    with pytest.raises(ValueError):
        order_neighbors(ds, [0.0], m)
    with pytest.raises(ValueError):
        order_neighbors_tree(ds, [0.0], m)


def test_distances_nondecreasing(rng):
    ds = random_dataset(rng, 200, 4)
    o = order_neighbors_tree(ds, rng.standard_normal(4), 60)
    assert np.all(np.diff(o.distances) >= 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 120), st.integers(1, 6), st.integers(0, 2**32 - 1), st.sampled_from([None, 2, 4]))
def test_tree_equals_brute_and_oracle(n, d, seed, grid):
    rng = np.random.default_rng(seed)
    ds = random_dataset(rng, n, d, grid=grid)
    Q = np.round(rng.standard_normal((5, d)) * 2) / 2 if grid else rng.standard_normal((5, d))
    m = int(rng.integers(1, n + 1))
    index = NeighborIndex(ds.X, method="tree")
    ti, td = index.query(Q, m)
    bi, bd = brute_knn(ds.X, Q, m)
    np.testing.assert_array_equal(ti, bi)
    np.testing.assert_array_equal(td, bd)
    for q in range(Q.shape[0]):
        assert bi[q].tolist() == sort_oracle(ds.X, Q[q], m)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 80), st.integers(0, 2**32 - 1))
def test_prefix_consistency(n, seed):
    rng = np.random.default_rng(seed)
    ds = random_dataset(rng, n, 3, grid=2)
    x = rng.standard_normal(3)
    m1, m2 = sorted(rng.integers(1, n + 1, size=2))
    small = order_neighbors_tree(ds, x, m1).indices
    big = order_neighbors_tree(ds, x, m2).indices
    np.testing.assert_array_equal(big[:m1], small)


def test_batch_equals_single_queries(rng):
    ds = random_dataset(rng, 300, 3)
    Q = rng.standard_normal((20, 3))
    index = NeighborIndex(ds.X)
    bi, _ = index.query(Q, 17)
    for q in range(20):
        np.testing.assert_array_equal(bi[q], index.query(Q[q:q + 1], 17)[0][0])


def test_dimension_mismatch(rng):
    ds = random_dataset(rng, 10, 3)
    with pytest.raises(ValueError):
        order_neighbors(ds, [0.0, 0.0], 2)
    with pytest.raises(ValueError):
        NeighborIndex(ds.X).query(np.zeros((1, 2)), 2)
