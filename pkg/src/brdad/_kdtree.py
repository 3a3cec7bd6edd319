"""Flat kd-tree construction plus the pure-Python query path.

The tree is stored as parallel arrays so the compiled kernel in
``_kdtree_ext`` and the fallback here walk exactly the same structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF_SIZE = 16


@dataclass(frozen=True)
class FlatTree:
    pts: np.ndarray          # (s, d) C-contiguous float64
    perm: np.ndarray         # node ranges index into this permutation of 0..s-1
    node_start: np.ndarray
    node_end: np.ndarray
    left: np.ndarray         # -1 marks a leaf
    right: np.ndarray
    split_dim: np.ndarray
    split_val: np.ndarray
    lo: np.ndarray           # (n_nodes, d) tight bounding boxes
    hi: np.ndarray
    depth: int


def build_tree(pts: np.ndarray, leaf_size: int = LEAF_SIZE) -> FlatTree:
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    s, d = pts.shape
    perm = np.arange(s, dtype=np.intp)
    starts, ends, lefts, rights, dims, vals, los, his = [], [], [], [], [], [], [], []
    max_depth = 0

    def new_node(start, end):
        block = pts[perm[start:end]]
        starts.append(start)
        ends.append(end)
        lefts.append(-1)
        rights.append(-1)
        dims.append(0)
        vals.append(0.0)
        los.append(block.min(axis=0))
        his.append(block.max(axis=0))
        return len(starts) - 1

    root = new_node(0, s)
    todo = [(root, 0)]
    while todo:
        node, depth = todo.pop()
        max_depth = max(max_depth, depth)
        start, end = starts[node], ends[node]
        if end - start <= leaf_size:
            continue
        spread = his[node] - los[node]
        dim = int(np.argmax(spread))
        if spread[dim] == 0.0:
            continue  # all points coincide; keep as one leaf
        idx = perm[start:end]
        mid = (end - start) // 2
        order = np.argpartition(pts[idx, dim], mid, kind="introselect")
        perm[start:end] = idx[order]
        dims[node] = dim
        vals[node] = float(pts[perm[start + mid], dim])
        lnode = new_node(start, start + mid)
        rnode = new_node(start + mid, end)
        lefts[node] = lnode
        rights[node] = rnode
        todo.append((rnode, depth + 1))
        todo.append((lnode, depth + 1))

    ip = np.intp
    return FlatTree(
        pts=pts,
        perm=perm,
        node_start=np.asarray(starts, dtype=ip),
        node_end=np.asarray(ends, dtype=ip),
        left=np.asarray(lefts, dtype=ip),
        right=np.asarray(rights, dtype=ip),
        split_dim=np.asarray(dims, dtype=ip),
        split_val=np.asarray(vals, dtype=np.float64),
        lo=np.ascontiguousarray(np.vstack(los)),
        hi=np.ascontiguousarray(np.vstack(his)),
        depth=max_depth,
    )


def squared_distances(pts: np.ndarray, q: np.ndarray) -> np.ndarray:
    # dimension-by-dimension accumulation; must match the compiled kernel bit for bit
    acc = np.zeros(pts.shape[0])
    for j in range(pts.shape[1]):
        t = q[j] - pts[:, j]
        acc += t * t
    return acc


def _lower_bound(q, lo, hi):
    acc = 0.0
    for j in range(q.shape[0]):
        if q[j] < lo[j]:
            g = lo[j] - q[j]
        elif q[j] > hi[j]:
            g = q[j] - hi[j]
        else:
            g = 0.0
        acc += g * g
    return acc


def query_one(tree: FlatTree, q: np.ndarray, k: int, excl: int):
    best_sq = np.empty(0)
    best_idx = np.empty(0, dtype=np.intp)
    stack = [0]
    while stack:
        node = stack.pop()
        if best_sq.size == k and _lower_bound(q, tree.lo[node], tree.hi[node]) > best_sq[-1]:
            continue
        if tree.left[node] < 0:
            idx = tree.perm[tree.node_start[node]:tree.node_end[node]]
            if excl >= 0:
                idx = idx[idx != excl]
            if idx.size == 0:
                continue
            sq = squared_distances(tree.pts[idx], q)
            cand_sq = np.concatenate([best_sq, sq])
            cand_idx = np.concatenate([best_idx, idx])
            order = np.lexsort((cand_idx, cand_sq))[:k]
            best_sq = cand_sq[order]
            best_idx = cand_idx[order]
        else:
            dim = tree.split_dim[node]
            if q[dim] <= tree.split_val[node]:
                near, far = tree.left[node], tree.right[node]
            else:
                near, far = tree.right[node], tree.left[node]
            stack.append(far)
            stack.append(near)
    return np.sqrt(best_sq), best_idx


def query_batch(tree: FlatTree, queries, k, exclude, out_dist, out_idx):
    for i in range(queries.shape[0]):
        dist, idx = query_one(tree, queries[i], k, int(exclude[i]))
        out_dist[i] = dist
        out_idx[i] = idx


def weighted_sum_batch(tree: FlatTree, queries, weights, exclude, out):
    k = weights.shape[0]
    for i in range(queries.shape[0]):
        dist, _ = query_one(tree, queries[i], k, int(exclude[i]))
        acc = 0.0
        for j in range(k):
            acc += weights[j] * dist[j]
        out[i] = acc
