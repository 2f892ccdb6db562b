import numpy as np
import pytest
from hypothesis import given, strategies as st

from mapcuts import _kernels as K
from mapcuts.mapstruct import euler_stats, validate
from mapcuts.sampler import (
    SeededRng, cvs, make_rng, sample_labels, sample_map, sample_map_stats, sample_plane_tree, tutte,
)


def test_streams_are_reproducible_and_distinct():
    a = SeededRng(7, 3).gen.integers(0, 2**62, 4)
    b = SeededRng(7, 3).gen.integers(0, 2**62, 4)
    c = SeededRng(7, 4).gen.integers(0, 2**62, 4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    with pytest.raises(ValueError):
        SeededRng(-1)


@given(st.integers(1, 200), st.integers(0, 2**32))
def test_plane_tree_is_dyck(n, seed):
    t = sample_plane_tree(n, make_rng(seed))
    h = np.cumsum(np.where(t.dyck, 1, -1))
    assert len(t.dyck) == 2 * n and h[-1] == 0 and h.min() >= 0
    par = t.parents()
    assert par[0] == -1 and np.all(par[1:] < np.arange(1, n + 1))


@given(st.integers(1, 40), st.integers(0, 2**32), st.integers(0, 1))
def test_bijection_postconditions(n, seed, eps):
    rng = make_rng(seed)
    lt = sample_labels(sample_plane_tree(n, rng), rng)
    assert lt.is_valid()
    pq = cvs(lt, eps)
    V, E, F, _ = euler_stats(pq.quad)
    assert (V, E, F) == (n + 2, 2 * n, n)
    m = tutte(pq)
    assert validate(m)
    assert m.n_edges == n
    # the fused kernel builds the same map
    tw, nx, r = K.map_from_tree(lt.tree.dyck, lt.increments, eps)
    assert np.array_equal(tw, m.twin) and np.array_equal(nx, m.next) and r == m.root


def test_cvs_rejects_bad_sign():
    rng = make_rng(0)
    lt = sample_labels(sample_plane_tree(3, rng), rng)
    with pytest.raises(ValueError):
        cvs(lt, 2)


def test_sample_zero_edges():
    assert sample_map(0, make_rng(0)).n_edges == 0


def test_stats_match_map():
    st_ = sample_map_stats(500, SeededRng(11, 0))
    m = sample_map(500, SeededRng(11, 0).gen)
    V, E, F, deg = euler_stats(m)
    assert st_["vertices"] == V and st_["root_degree"] == deg


def test_large_sample_is_fast():
    import time
    t = time.perf_counter()
    s = sample_map_stats(100_000, make_rng(1))
    assert time.perf_counter() - t < 5
    assert 0.2 < s["cut_vertices"] / 1e5 < 0.24
