"""Exact k-nearest-neighbour search.

Two routes share one distance kernel so their outputs agree bit for bit:

* :func:`brute_force_knn` scans every reference point.
* :class:`NeighborIndex` asks a k-d tree (``scipy.spatial.cKDTree``) for a
  candidate superset (everything within the k-th tree distance plus a
  relative margin), then re-ranks the candidates with the shared kernel.

Ordering is by ascending distance, ties broken by ascending reference row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import ArityMismatch, EmptyReference

DEFAULT_K = 25
TREE_MAX_DIMS = 30
# above this the per-column loop gets slow; both routes still share the kernel
_SEQUENTIAL_MAX_DIMS = 64
_MARGIN = 1e-9


def sq_distances(points: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances from ``q`` to each row of ``points``.

    Columns are accumulated left to right, so the result for a row does not
    depend on which other rows are present.
    """
    d = points.shape[1]
    if d > _SEQUENTIAL_MAX_DIMS:
        diff = points - q
        return np.einsum("ij,ij->i", diff, diff)
    acc = np.zeros(points.shape[0])
    for j in range(d):
        t = points[:, j] - q[j]
        acc += t * t
    return acc


def _rank(sq: np.ndarray, ids: np.ndarray, k: int):
    dist = np.sqrt(sq)
    order = np.lexsort((ids, dist))[:k]
    return ids[order], dist[order]


@dataclass(frozen=True)
class NeighborList:
    indices: np.ndarray
    distances: np.ndarray

    def __len__(self):
        return len(self.indices)


def _as_points(points) -> np.ndarray:
    P = np.ascontiguousarray(points, dtype=float)
    if P.ndim == 1:
        P = P.reshape(-1, 1)
    if P.ndim != 2 or P.shape[0] == 0:
        raise EmptyReference("reference set must contain at least one point")
    if not np.all(np.isfinite(P)):
        raise ValueError("reference coordinates must be finite")
    return P


def _check_query(q, dims: int) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape[0] != dims:
        raise ArityMismatch(f"query has {q.shape[0]} coordinates, reference has {dims}")
    return q


def brute_force_knn(points, query, k: int) -> NeighborList:
    P = _as_points(points)
    q = _check_query(query, P.shape[1])
    if k < 1:
        raise ValueError("k must be >= 1")
    idx, dist = _rank(sq_distances(P, q), np.arange(P.shape[0]), k)
    return NeighborList(idx, dist)


class NeighborIndex:
    """Immutable exact KNN index over a reference matrix.

    Above ``max_tree_dims`` dimensions the tree is skipped and every query is
    a full scan; results are identical either way.
    """

    def __init__(self, points, max_tree_dims: int = TREE_MAX_DIMS):
        self.points = _as_points(points)
        self.points.setflags(write=False)
        self._ids = np.arange(self.points.shape[0])
        self._tree = cKDTree(self.points) if self.dims <= max_tree_dims else None

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dims(self) -> int:
        return self.points.shape[1]

    @property
    def uses_tree(self) -> bool:
        return self._tree is not None

    def query(self, q, k: int) -> NeighborList:
        idx, dist = self.query_batch(_check_query(q, self.dims).reshape(1, -1), k)
        return NeighborList(idx[0], dist[0])

    def query_batch(self, Q, k: int):
        """Neighbours for every row of ``Q``.

        Returns ``(indices, distances)`` arrays of shape ``(m, min(k, size))``.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        Q = np.asarray(Q, dtype=float)
        if Q.ndim == 1:
            Q = Q.reshape(-1, self.dims) if self.dims == 1 else Q.reshape(1, -1)
        if Q.shape[1] != self.dims:
            raise ArityMismatch(f"queries have {Q.shape[1]} coordinates, reference has {self.dims}")
        kk = min(k, self.size)
        out_idx = np.empty((Q.shape[0], kk), dtype=np.intp)
        out_dist = np.empty((Q.shape[0], kk))
        if Q.shape[0] == 0:
            return out_idx, out_dist

        if self._tree is None:
            for i, q in enumerate(Q):
                out_idx[i], out_dist[i] = _rank(sq_distances(self.points, q), self._ids, kk)
            return out_idx, out_dist

        tree_dist, _ = self._tree.query(Q, k=kk)
        kth = np.asarray(tree_dist).reshape(Q.shape[0], -1)[:, -1]
        radii = kth * (1.0 + _MARGIN) + _MARGIN
        candidates = self._tree.query_ball_point(Q, radii)
        for i, q in enumerate(Q):
            cand = np.asarray(candidates[i], dtype=np.intp)
            if len(cand) < kk:  # cannot happen with a correct margin; stay exact anyway
                cand = self._ids
            out_idx[i], out_dist[i] = _rank(sq_distances(self.points[cand], q), cand, kk)
        return out_idx, out_dist


def build_index(points, max_tree_dims: int = TREE_MAX_DIMS) -> NeighborIndex:
    return NeighborIndex(points, max_tree_dims=max_tree_dims)


def query_knn(index: NeighborIndex, query, k: int) -> NeighborList:
    return index.query(query, k)
