# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled k-NN query kernel over the flat kd-tree built in ``brdad._kdtree``.

Candidates are ordered by the key (squared distance, reference index), the
same key the pure-Python path and the brute-force oracle use, so all three
return bit-identical neighbour lists.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdlib cimport malloc, free

cnp.import_array()

ctypedef cnp.intp_t intp


cdef inline bint _worse(double a_sq, intp a_i, double b_sq, intp b_i) noexcept nogil:
    return a_sq > b_sq or (a_sq == b_sq and a_i > b_i)


cdef inline void _sift_down(double* hs, intp* hi, intp size, intp pos) noexcept nogil:
    # max-heap on (sq, idx)
    cdef intp child
    cdef double tsq
    cdef intp ti
    while True:
        child = 2 * pos + 1
        if child >= size:
            break
        if child + 1 < size and _worse(hs[child + 1], hi[child + 1], hs[child], hi[child]):
            child += 1
        if _worse(hs[child], hi[child], hs[pos], hi[pos]):
            tsq = hs[pos]; hs[pos] = hs[child]; hs[child] = tsq
            ti = hi[pos]; hi[pos] = hi[child]; hi[child] = ti
            pos = child
        else:
            break


cdef inline void _sift_up(double* hs, intp* hi, intp pos) noexcept nogil:
    cdef intp parent
    cdef double tsq
    cdef intp ti
    while pos > 0:
        parent = (pos - 1) // 2
        if _worse(hs[pos], hi[pos], hs[parent], hi[parent]):
            tsq = hs[pos]; hs[pos] = hs[parent]; hs[parent] = tsq
            ti = hi[pos]; hi[pos] = hi[parent]; hi[parent] = ti
            pos = parent
        else:
            break


cdef void _query_one(
    const double[:, ::1] pts,
    const intp[::1] perm,
    const intp[::1] node_start,
    const intp[::1] node_end,
    const intp[::1] left,
    const intp[::1] right,
    const intp[::1] split_dim,
    const double[::1] split_val,
    const double[:, ::1] lo,
    const double[:, ::1] hi_box,
    const double* q,
    intp k,
    intp excl,
    double* hs,
    intp* hidx,
    intp* stack,
) noexcept nogil:
    cdef intp d = pts.shape[1]
    cdef intp size = 0
    cdef intp top = 0
    cdef intp node, j, p, idx, near, far
    cdef double acc, t, g
    stack[0] = 0
    top = 1
    while top > 0:
        top -= 1
        node = stack[top]
        if size == k:
            acc = 0.0
            for j in range(d):
                g = 0.0
                if q[j] < lo[node, j]:
                    g = lo[node, j] - q[j]
                elif q[j] > hi_box[node, j]:
                    g = q[j] - hi_box[node, j]
                acc += g * g
            if acc > hs[0]:
                continue
        if left[node] < 0:
            for p in range(node_start[node], node_end[node]):
                idx = perm[p]
                if idx == excl:
                    continue
                acc = 0.0
                for j in range(d):
                    t = q[j] - pts[idx, j]
                    acc += t * t
                if size < k:
                    hs[size] = acc
                    hidx[size] = idx
                    _sift_up(hs, hidx, size)
                    size += 1
                elif _worse(hs[0], hidx[0], acc, idx):
                    hs[0] = acc
                    hidx[0] = idx
                    _sift_down(hs, hidx, size, 0)
        else:
            if q[split_dim[node]] <= split_val[node]:
                near = left[node]
                far = right[node]
            else:
                near = right[node]
                far = left[node]
            stack[top] = far
            stack[top + 1] = near
            top += 2
    # heap sort into ascending (sq, idx) order
    cdef intp end = size - 1
    cdef double tsq
    cdef intp ti
    while end > 0:
        tsq = hs[0]; hs[0] = hs[end]; hs[end] = tsq
        ti = hidx[0]; hidx[0] = hidx[end]; hidx[end] = ti
        _sift_down(hs, hidx, end, 0)
        end -= 1


def query_batch(
    const double[:, ::1] pts,
    const intp[::1] perm,
    const intp[::1] node_start,
    const intp[::1] node_end,
    const intp[::1] left,
    const intp[::1] right,
    const intp[::1] split_dim,
    const double[::1] split_val,
    const double[:, ::1] lo,
    const double[:, ::1] hi_box,
    intp depth,
    const double[:, ::1] queries,
    intp k,
    const intp[::1] exclude,
    double[:, ::1] out_dist,
    intp[:, ::1] out_idx,
):
    """Fill ``out_dist``/``out_idx`` (m x k) for every query row; releases the GIL."""
    cdef intp m = queries.shape[0]
    cdef intp i, j
    cdef double* hs
    cdef intp* hidx
    cdef intp* stack
    if m == 0:
        return
    hs = <double*> malloc(k * sizeof(double))
    hidx = <intp*> malloc(k * sizeof(intp))
    stack = <intp*> malloc((2 * depth + 4) * sizeof(intp))
    if hs == NULL or hidx == NULL or stack == NULL:
        free(hs); free(hidx); free(stack)
        raise MemoryError()
    try:
        with nogil:
            for i in range(m):
                _query_one(pts, perm, node_start, node_end, left, right, split_dim,
                           split_val, lo, hi_box, &queries[i, 0], k, exclude[i],
                           hs, hidx, stack)
                for j in range(k):
                    out_dist[i, j] = sqrt(hs[j])
                    out_idx[i, j] = hidx[j]
    finally:
        free(hs)
        free(hidx)
        free(stack)


def weighted_sum_batch(
    const double[:, ::1] pts,
    const intp[::1] perm,
    const intp[::1] node_start,
    const intp[::1] node_end,
    const intp[::1] left,
    const intp[::1] right,
    const intp[::1] split_dim,
    const double[::1] split_val,
    const double[:, ::1] lo,
    const double[:, ::1] hi_box,
    intp depth,
    const double[:, ::1] queries,
    const double[::1] weights,
    const intp[::1] exclude,
    double[::1] out,
):
    """out[i] = sum_j weights[j] * (j+1)-distance of query i, without materialising m x k."""
    cdef intp m = queries.shape[0]
    cdef intp k = weights.shape[0]
    cdef intp i, j
    cdef double acc
    cdef double* hs
    cdef intp* hidx
    cdef intp* stack
    if m == 0:
        return
    hs = <double*> malloc(k * sizeof(double))
    hidx = <intp*> malloc(k * sizeof(intp))
    stack = <intp*> malloc((2 * depth + 4) * sizeof(intp))
    if hs == NULL or hidx == NULL or stack == NULL:
        free(hs); free(hidx); free(stack)
        raise MemoryError()
    try:
        with nogil:
            for i in range(m):
                _query_one(pts, perm, node_start, node_end, left, right, split_dim,
                           split_val, lo, hi_box, &queries[i, 0], k, exclude[i],
                           hs, hidx, stack)
                acc = 0.0
                for j in range(k):
                    acc += weights[j] * sqrt(hs[j])
                out[i] = acc
    finally:
        free(hs)
        free(hidx)
        free(stack)
