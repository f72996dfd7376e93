import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from etale import _kernels_py, builders, kernels
from etale.growth import growth_function

compiled = pytest.importorskip("etale._kernels")


@st.composite
def csr_graphs(draw):
    n = draw(st.integers(1, 30))
    rows = [draw(st.lists(st.integers(0, n - 1), max_size=5)) for _ in range(n)]
    indptr = np.cumsum([0] + [len(r) for r in rows])
    indices = np.array([v for r in rows for v in r], dtype=np.int64)
    return n, indptr, indices


@given(csr_graphs(), st.data())
def test_bfs_parity(graph, data):
    n, indptr, indices = graph
    starts = np.array(data.draw(st.lists(st.integers(0, n - 1), max_size=4)), dtype=np.int64)
    a = kernels.bfs_distances(indptr, indices, starts, n, impl=compiled)
    b = kernels.bfs_distances(indptr, indices, starts, n, impl=_kernels_py)
    assert np.array_equal(a, b)


@given(csr_graphs(), st.data())
def test_count_and_image_parity(graph, data):
    n, indptr, indices = graph
    marked = np.array(data.draw(st.lists(st.booleans(), min_size=n, max_size=n)))
    labels = np.arange(n)
    a = kernels.count_marked(indptr, indices, labels, marked, impl=compiled)
    b = kernels.count_marked(indptr, indices, labels, marked, impl=_kernels_py)
    assert np.array_equal(a, b)
    a = kernels.left_image_mask(indptr, indices, marked, impl=compiled)
    b = kernels.left_image_mask(indptr, indices, marked, impl=_kernels_py)
    assert np.array_equal(a, b)


@given(st.lists(st.tuples(st.integers(-1, 9), st.integers(0, 5)), max_size=60), st.integers(0, 10))
def test_ball_counts_parity(pairs, n_max):
    dist = np.array([p[0] for p in pairs], dtype=np.int64)
    src = np.array([p[1] for p in pairs], dtype=np.int64)
    a = kernels.ball_counts(dist, src, 6, n_max, impl=compiled)
    b = kernels.ball_counts(dist, src, 6, n_max, impl=_kernels_py)
    assert np.array_equal(a, b)


def test_forced_fallback_gives_same_growth():
    code = (
        "from etale import kernels, builders; from etale.growth import growth_function;"
        "print(kernels.BACKEND, list(growth_function(builders.stationary_bratteli([[1,1],[1,0]], 5), 6).table))"
    )
    out = subprocess.run([sys.executable, "-c", code], env={"ETALE_PURE_PYTHON": "1", "PATH": ""}, capture_output=True, text=True, check=True)
    backend, table = out.stdout.split(" ", 1)
    assert backend == "python"
    G = builders.stationary_bratteli([[1, 1], [1, 0]], 5)
    assert table.strip() == str(list(growth_function(G, 6).table))
