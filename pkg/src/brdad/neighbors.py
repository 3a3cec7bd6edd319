"""Exact Euclidean k-nearest-neighbour search.

Results are ordered by (squared distance, reference index). The kd-tree
query runs in the compiled ``_kdtree_ext`` kernel when it is importable and
falls back to the pure-Python walk in ``_kdtree`` otherwise; set
``BRDAD_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from . import _kdtree

try:
    if os.environ.get("BRDAD_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python backend forced")
    from . import _kdtree_ext as _compiled
except ImportError:
    _compiled = None

_CHUNK = 2048


def available_backends() -> list:
    return ["python"] + (["compiled"] if _compiled is not None else [])


def default_backend() -> str:
    return "compiled" if _compiled is not None else "python"


def _kernel(backend: Optional[str]):
    backend = backend or default_backend()
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kd-tree kernel is not built")
        return _compiled
    if backend == "python":
        return None
    raise ValueError(f"unknown backend {backend!r}")


class NeighborIndex:
    """Immutable kd-tree over a reference point set; safe for concurrent queries."""

    def __init__(self, refs, leaf_size: int = _kdtree.LEAF_SIZE):
        refs = np.asarray(refs, dtype=np.float64)
        if refs.ndim == 1:
            refs = refs.reshape(-1, 1)
        if refs.ndim != 2 or refs.shape[0] == 0:
            raise ValueError("reference set must be a non-empty (s, d) array")
        if not np.all(np.isfinite(refs)):
            raise ValueError("reference points must be finite")
        self.tree = _kdtree.build_tree(refs, leaf_size)
        self.tree.pts.setflags(write=False)

    @property
    def s(self) -> int:
        return self.tree.pts.shape[0]

    @property
    def d(self) -> int:
        return self.tree.pts.shape[1]

    @property
    def points(self) -> np.ndarray:
        return self.tree.pts

    def _prepare(self, queries, k, exclude):
        q = np.ascontiguousarray(queries, dtype=np.float64)
        if q.ndim == 1:
            q = q.reshape(-1, self.d)
        if q.shape[1] != self.d:
            raise ValueError(f"query dimension {q.shape[1]} != index dimension {self.d}")
        if exclude is None:
            excl = np.full(q.shape[0], -1, dtype=np.intp)
        else:
            excl = np.ascontiguousarray(np.broadcast_to(exclude, (q.shape[0],)), dtype=np.intp)
        limit = self.s - (1 if np.any(excl >= 0) else 0)
        if not 1 <= k <= limit:
            raise ValueError(f"k={k} outside [1, {limit}] for {self.s} references")
        return q, excl

    def _tree_args(self):
        t = self.tree
        return (t.pts, t.perm, t.node_start, t.node_end, t.left, t.right,
                t.split_dim, t.split_val, t.lo, t.hi, t.depth)

    def query(self, queries, k: int, exclude=None, threads: int = 1, backend: Optional[str] = None):
        """Return (distances, indices), each (m, k), for every query row.

        ``exclude`` is a reference index (or one per query, -1 for none)
        skipped during the search.
        """
        q, excl = self._prepare(queries, k, exclude)
        m = q.shape[0]
        dist = np.empty((m, k))
        idx = np.empty((m, k), dtype=np.intp)
        kern = _kernel(backend)

        def run(lo, hi):
            if kern is None:
                _kdtree.query_batch(self.tree, q[lo:hi], k, excl[lo:hi], dist[lo:hi], idx[lo:hi])
            else:
                kern.query_batch(*self._tree_args(), q[lo:hi], k, excl[lo:hi], dist[lo:hi], idx[lo:hi])

        _run_chunks(run, m, threads)
        return dist, idx

    def weighted_k_distance(self, queries, weights, exclude=None, threads: int = 1,
                            backend: Optional[str] = None) -> np.ndarray:
        """Sum_i weights[i] * (i+1)-distance for every query row."""
        w = np.ascontiguousarray(weights, dtype=np.float64)
        q, excl = self._prepare(queries, w.shape[0], exclude)
        out = np.empty(q.shape[0])
        kern = _kernel(backend)

        def run(lo, hi):
            if kern is None:
                _kdtree.weighted_sum_batch(self.tree, q[lo:hi], w, excl[lo:hi], out[lo:hi])
            else:
                kern.weighted_sum_batch(*self._tree_args(), q[lo:hi], w, excl[lo:hi], out[lo:hi])

        _run_chunks(run, q.shape[0], threads)
        return out


def _run_chunks(fn, m, threads):
    bounds = [(lo, min(lo + _CHUNK, m)) for lo in range(0, m, _CHUNK)]
    if threads <= 1 or len(bounds) <= 1:
        for lo, hi in bounds:
            fn(lo, hi)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for f in [pool.submit(fn, lo, hi) for lo, hi in bounds]:
            f.result()


def build_index(refs) -> NeighborIndex:
    return NeighborIndex(refs)


def knn_distances(index: NeighborIndex, query, k: int, exclude: Optional[int] = None,
                  return_indices: bool = False, backend: Optional[str] = None):
    """k-distances of a single query point, sorted ascending."""
    q = np.asarray(query, dtype=np.float64).reshape(1, index.d)
    dist, idx = index.query(q, k, exclude=-1 if exclude is None else exclude, backend=backend)
    if return_indices:
        return dist[0], idx[0]
    return dist[0]


def brute_force_knn(refs, query, k: int, exclude: Optional[int] = None, return_indices: bool = False):
    """Full pairwise scan with the same ordering key as the kd-tree; testing oracle."""
    refs = np.asarray(refs, dtype=np.float64)
    if refs.ndim == 1:
        refs = refs.reshape(-1, 1)
    if refs.shape[0] == 0:
        raise ValueError("reference set must be non-empty")
    q = np.asarray(query, dtype=np.float64).reshape(refs.shape[1])
    idx = np.arange(refs.shape[0], dtype=np.intp)
    if exclude is not None and exclude >= 0:
        idx = idx[idx != exclude]
    if not 1 <= k <= idx.size:
        raise ValueError(f"k={k} outside [1, {idx.size}] for {refs.shape[0]} references")
    sq = _kdtree.squared_distances(refs[idx], q)
    order = np.lexsort((idx, sq))[:k]
    dist = np.sqrt(sq[order])
    if return_indices:
        return dist, idx[order]
    return dist


def average_i_distances(fit_points, max_rank: Optional[int] = None, threads: int = 1,
                        index: Optional[NeighborIndex] = None,
                        backend: Optional[str] = None) -> np.ndarray:
    """Leave-one-out average i-distances within ``fit_points``.

    Entry i-1 is the mean over points X_j of the i-distance of X_j among the
    other fit points. The full profile has length s-1; ``max_rank`` truncates
    it (a prefix of the full profile, identical bit for bit).
    """
    pts = np.asarray(fit_points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    s = pts.shape[0]
    if s < 2:
        raise ValueError(f"need at least 2 fit points, got {s}")
    k = s - 1 if max_rank is None else min(max_rank, s - 1)
    index = index or NeighborIndex(pts)
    dist, _ = index.query(pts, k, exclude=np.arange(s, dtype=np.intp), threads=threads, backend=backend)
    return column_means(dist)


def column_means(dist: np.ndarray) -> np.ndarray:
    # row-sequential accumulation so the brute-force pipeline can reproduce it exactly
    acc = np.zeros(dist.shape[1])
    for row in dist:
        acc += row
    return acc / dist.shape[0]
