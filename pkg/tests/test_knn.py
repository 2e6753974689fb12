import math

import numpy as np
import pytest

from conformal_pi.errors import ArityMismatch, EmptyReference
from conformal_pi.knn import NeighborIndex, brute_force_knn, build_index, query_knn


def oracle_knn(points, q, k):
    """Pure-Python scan: sequential sum of squares, sort by (distance, row)."""
    rows = []
    for i, p in enumerate(points):
        s = 0.0
        for a, b in zip(p, q):
            t = float(a) - float(b)
            s += t * t
        rows.append((math.sqrt(s), i))
    rows.sort()
    rows = rows[:k]
    return [i for _, i in rows], [d for d, _ in rows]


def test_examples():
    idx = build_index([[0.0], [1.0], [2.0]])
    nl = query_knn(idx, [0.9], 2)
    assert list(nl.indices) == [1, 0]
    np.testing.assert_allclose(nl.distances, [0.1, 0.9], atol=1e-15)
    hit = query_knn(idx, [2.0], 1)
    assert list(hit.indices) == [2] and hit.distances[0] == 0.0
    assert len(query_knn(idx, [5.0], 10)) == 3
    assert build_index([[1.0, 2.0]]).size == 1


def test_errors():
    with pytest.raises(EmptyReference):
        build_index(np.empty((0, 2)))
    with pytest.raises(ArityMismatch):
        query_knn(build_index([[0.0, 1.0]]), [1.0, 2.0, 3.0], 1)


def test_ties_break_by_row():
    pts = [[1.0], [-1.0], [1.0], [-1.0]]
    nl = query_knn(build_index(pts), [0.0], 3)
    assert list(nl.indices) == [0, 1, 2]


@pytest.mark.parametrize("dims", [1, 3, 8])
def test_index_matches_python_oracle(rng, dims):
    pts = rng.normal(size=(300, dims))
    # duplicates and a grid block force exact ties
    pts[10] = pts[20]
    idx = build_index(pts)
    assert idx.uses_tree
    Q = np.vstack([rng.normal(size=(30, dims)), pts[:5]])
    for k in (1, 7, 40):
        I, D = idx.query_batch(Q, k)
        for q, i_row, d_row in zip(Q, I, D):
            oi, od = oracle_knn(pts.tolist(), q.tolist(), k)
            assert i_row.tolist() == oi
            assert d_row.tolist() == od


def test_integer_grid_ties(rng):
    pts = rng.integers(0, 4, size=(200, 2)).astype(float)
    idx = build_index(pts)
    for q in rng.integers(0, 4, size=(20, 2)).astype(float):
        nl = idx.query(q, 15)
        oi, od = oracle_knn(pts.tolist(), q.tolist(), 15)
        assert nl.indices.tolist() == oi and nl.distances.tolist() == od


def test_high_dim_falls_back_to_scan(rng):
    pts = rng.normal(size=(60, 40))
    idx = NeighborIndex(pts)
    assert not idx.uses_tree
    q = rng.normal(size=40)
    a = idx.query(q, 5)
    b = brute_force_knn(pts, q, 5)
    assert a.indices.tolist() == b.indices.tolist()
    assert a.distances.tolist() == b.distances.tolist()


def test_self_query_first_and_sorted(rng):
    pts = rng.uniform(size=(100, 3))
    idx = build_index(pts)
    I, D = idx.query_batch(pts, 5)
    assert np.all(I[:, 0] == np.arange(100))
    assert np.all(D[:, 0] == 0.0)
    assert np.all(np.diff(D, axis=1) >= 0)
