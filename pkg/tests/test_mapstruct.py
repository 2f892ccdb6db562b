import numpy as np
import pytest
from hypothesis import given, strategies as st

from mapcuts import _kernels as K
from mapcuts.mapstruct import (
    CombMap, MapStructureError, blocks_and_cuts, brute_force_cut_vertices, canonical_code,
    dyck_words, enumerate_all, enumeration_totals, euler_stats, validate,
)
from mapcuts.sampler import make_rng, sample_map


def test_trivial_maps():
    t = CombMap.trivial()
    assert euler_stats(t) == (1, 0, 1, 0)
    assert validate(t)
    assert canonical_code(t) == b""
    assert blocks_and_cuts(t).n_blocks == 0


def test_single_edge_and_loop():
    e = CombMap.single_edge()
    assert euler_stats(e) == (2, 1, 1, 1)
    lp = CombMap.single_loop()
    assert euler_stats(lp) == (1, 1, 2, 2)
    assert blocks_and_cuts(lp).cut_vertices == frozenset()


def test_loop_on_edge_is_cut_vertex():
    # edge 0 = darts (0,1), loop = darts (2,3) at the tail of dart 0
    m = CombMap([1, 0, 3, 2], [2, 1, 3, 0], 0)
    assert validate(m)
    d = blocks_and_cuts(m)
    assert d.n_blocks == 2
    assert len(d.cut_vertices) == 1
    assert d.cut_vertices == brute_force_cut_vertices(m)


def test_validate_rejects_bad_tables():
    with pytest.raises(MapStructureError):
        validate(CombMap([0, 1], [0, 1]))          # fixed point of twin
    with pytest.raises(MapStructureError):
        validate(CombMap([1, 0], [0, 0]))          # next not a permutation
    with pytest.raises(MapStructureError):
        validate(CombMap([1, 2, 0, 3], [0, 1, 2, 3]))


def test_disconnected_is_invalid():
    m = CombMap([1, 0, 3, 2], [0, 1, 2, 3], 0)
    assert not validate(m)


def test_text_roundtrip():
    m = sample_map(7, make_rng(1))
    assert CombMap.from_text(m.to_text()) == m
    with pytest.raises(MapStructureError):
        CombMap.from_text("1; 0; 1 0")


def test_dyck_word_count():
    assert sum(1 for _ in dyck_words(5)) == 42


@pytest.mark.parametrize("n,count", [(0, 1), (1, 2), (2, 9), (3, 54), (4, 378)])
def test_enumeration_is_uniform_and_complete(n, count):
    codes = {}
    for m, w in enumerate_all(n):
        assert validate(m)
        c = canonical_code(m)
        codes[c] = codes.get(c, 0) + 1
    assert len(codes) == count
    # every map appears n + 2 times (once for n = 0)
    assert set(codes.values()) == {max(n + 2, 1) if n else 1}


def test_totals_small():
    t = enumeration_totals(2)
    assert t["maps"] == 9 and t["cut_vertices"] == 8 and t["blocks"] == 17
    assert t["root_not_cut"] == 3
    assert enumeration_totals(1)["cut_vertices"] == 0


def test_brute_force_agrees_on_all_small_maps():
    for n in range(1, 5):
        for m, _ in enumerate_all(n):
            assert blocks_and_cuts(m).cut_vertices == brute_force_cut_vertices(m)


@given(st.integers(1, 60), st.integers(0, 2**32))
def test_random_maps_blocks_invariants(n, seed):
    m = sample_map(n, make_rng(seed))
    assert validate(m)
    V, E, F, deg = euler_stats(m)
    assert V - E + F == 2
    d = blocks_and_cuts(m)
    # block-cut tree: sum over vertices of (blocks at v - 1) = blocks - 1
    inc = d.vertex_block_incidence
    assert int(np.sum(inc - 1)) == d.n_blocks - 1
    assert sum(len(b) for b in d.blocks) == n
    nv, nf, cuts, nb, rd = K.map_statistics(m.twin, m.next, m.root)
    assert (nv, nf, cuts, nb, rd) == (V, F, len(d.cut_vertices), d.n_blocks, deg)


@given(st.integers(1, 10), st.integers(0, 2**32))
def test_brute_force_on_random_maps(n, seed):
    m = sample_map(n, make_rng(seed))
    assert blocks_and_cuts(m).cut_vertices == brute_force_cut_vertices(m)


def test_canonical_code_is_relabelling_invariant():
    m = sample_map(12, make_rng(5))
    rng = np.random.default_rng(0)
    perm = rng.permutation(24)
    inv = np.argsort(perm)
    tw = perm[m.twin[inv]]
    nx = perm[m.next[inv]]
    m2 = CombMap(tw, nx, int(perm[m.root]))
    assert canonical_code(m2) == canonical_code(m)


def test_enumeration_guard():
    with pytest.raises(ValueError):
        list(enumerate_all(8))
