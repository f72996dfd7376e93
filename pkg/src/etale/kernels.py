"""Kernel dispatch: the compiled extension when importable, else the Python fallback.

Set ``ETALE_PURE_PYTHON=1`` to force the fallback.
"""

import os

import numpy as np

from . import _kernels_py

if os.environ.get("ETALE_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"


def _i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def _u8(a):
    return np.ascontiguousarray(a, dtype=np.uint8)


def bfs_distances(indptr, indices, starts, n_nodes, impl=None):
    """Multi-source BFS over a CSR graph; unreachable nodes get -1."""
    impl = impl or _impl
    return impl.bfs_distances(_i64(indptr), _i64(indices), _i64(starts), int(n_nodes))


def count_marked(indptr, members, labels, marked, impl=None):
    """Per CSR row, how many members ``a`` have ``marked[labels[a]]``."""
    impl = impl or _impl
    return impl.count_marked(_i64(indptr), _i64(members), _i64(labels), _u8(marked))


def left_image_mask(indptr, indices, selected, impl=None):
    """Mask of all CSR neighbours of the selected nodes."""
    impl = impl or _impl
    return impl.left_image_mask(_i64(indptr), _i64(indices), _u8(selected)).astype(bool)


def ball_counts(dist, source, n_points, n_max, impl=None):
    """``out[x, n]`` = number of nodes with source ``x`` and distance ``<= n``."""
    impl = impl or _impl
    return impl.ball_counts(_i64(dist), _i64(source), int(n_points), int(n_max))
