# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.  Semantics must match ``_kernels_py`` exactly."""

import numpy as np

from libc.stdint cimport int64_t, uint8_t


def bfs_distances(const int64_t[::1] indptr, const int64_t[::1] indices,
                  const int64_t[::1] starts, Py_ssize_t n_nodes):
    dist_arr = np.full(n_nodes, -1, dtype=np.int64)
    queue_arr = np.empty(n_nodes, dtype=np.int64)
    cdef int64_t[::1] dist = dist_arr
    cdef int64_t[::1] queue = queue_arr
    cdef Py_ssize_t head = 0, tail = 0, i, u, v
    for i in range(starts.shape[0]):
        u = starts[i]
        if dist[u] < 0:
            dist[u] = 0
            queue[tail] = u
            tail += 1
    while head < tail:
        u = queue[head]
        head += 1
        for i in range(indptr[u], indptr[u + 1]):
            v = indices[i]
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue[tail] = v
                tail += 1
    return dist_arr


def count_marked(const int64_t[::1] indptr, const int64_t[::1] members,
                 const int64_t[::1] labels, const uint8_t[::1] marked):
    cdef Py_ssize_t rows = indptr.shape[0] - 1, r, i
    out_arr = np.zeros(rows, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    for r in range(rows):
        for i in range(indptr[r], indptr[r + 1]):
            if marked[labels[members[i]]]:
                out[r] += 1
    return out_arr


def left_image_mask(const int64_t[::1] indptr, const int64_t[::1] indices,
                    const uint8_t[::1] selected):
    cdef Py_ssize_t n = selected.shape[0], u, i
    out_arr = np.zeros(n, dtype=np.uint8)
    cdef uint8_t[::1] out = out_arr
    for u in range(n):
        if selected[u]:
            for i in range(indptr[u], indptr[u + 1]):
                out[indices[i]] = 1
    return out_arr


def ball_counts(const int64_t[::1] dist, const int64_t[::1] source,
                Py_ssize_t n_points, Py_ssize_t n_max):
    out_arr = np.zeros((n_points, n_max + 1), dtype=np.int64)
    cdef int64_t[:, ::1] out = out_arr
    cdef Py_ssize_t a, x, n
    cdef int64_t d
    for a in range(dist.shape[0]):
        d = dist[a]
        if 0 <= d <= n_max:
            out[source[a], d] += 1
    for x in range(n_points):
        for n in range(1, n_max + 1):
            out[x, n] += out[x, n - 1]
    return out_arr
