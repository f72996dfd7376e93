"""Pure-Python versions of the compiled kernels (same signatures and results)."""

from collections import deque

import numpy as np


def bfs_distances(indptr, indices, starts, n_nodes):
    indptr, indices = indptr.tolist(), indices.tolist()
    dist = [-1] * n_nodes
    queue = deque()
    for u in starts.tolist():
        if dist[u] < 0:
            dist[u] = 0
            queue.append(u)
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for i in range(indptr[u], indptr[u + 1]):
            v = indices[i]
            if dist[v] < 0:
                dist[v] = du
                queue.append(v)
    return np.array(dist, dtype=np.int64)


def count_marked(indptr, members, labels, marked):
    indptr, members = indptr.tolist(), members.tolist()
    labels, marked = labels.tolist(), marked.tolist()
    return np.array(
        [sum(1 for i in range(indptr[r], indptr[r + 1]) if marked[labels[members[i]]]) for r in range(len(indptr) - 1)],
        dtype=np.int64,
    )


def left_image_mask(indptr, indices, selected):
    indptr, indices = indptr.tolist(), indices.tolist()
    out = [0] * len(selected)
    for u, sel in enumerate(selected.tolist()):
        if sel:
            for i in range(indptr[u], indptr[u + 1]):
                out[indices[i]] = 1
    return np.array(out, dtype=np.uint8)


def ball_counts(dist, source, n_points, n_max):
    out = [[0] * (n_max + 1) for _ in range(n_points)]
    for d, x in zip(dist.tolist(), source.tolist()):
        if 0 <= d <= n_max:
            out[x][d] += 1
    for row in out:
        for n in range(1, n_max + 1):
            row[n] += row[n - 1]
    return np.array(out, dtype=np.int64).reshape(n_points, n_max + 1)
