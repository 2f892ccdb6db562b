"""Rooted planar maps as rotation systems, block decomposition, small-n enumeration.

A map on ``n`` edges has darts ``0..2n-1``. ``twin`` pairs the two darts of
an edge and ``next`` turns counterclockwise around a vertex, so vertices are
the cycles of ``next`` and faces the cycles of ``next o twin``. Maps built by
this package use ``twin[d] == d ^ 1`` (darts ``2e, 2e+1`` form edge ``e``),
but any involution is accepted.

Cut vertices follow the edge-partition definition: ``v`` is a cut vertex if
the edges can be split into two nonempty classes meeting only at ``v``. In
block terms every loop is a block of its own, so a vertex carrying a loop and
any other edge is a cut vertex.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _kernels as K

__all__ = [
    "MapStructureError",
    "CombMap",
    "BlockDecomposition",
    "validate",
    "euler_stats",
    "blocks_and_cuts",
    "canonical_code",
    "brute_force_cut_vertices",
    "enumerate_all",
    "enumeration_totals",
    "MAX_ENUM_N",
]

MAX_ENUM_N = 7


class MapStructureError(ValueError):
    """Malformed rotation system; ``dart`` names the first offending dart."""

    def __init__(self, msg: str, dart: int | None = None):
        super().__init__(msg if dart is None else f"{msg} (dart {dart})")
        self.dart = dart


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.int64)
    arr.setflags(write=False)
    return arr


class CombMap:
    """Immutable rooted combinatorial map.

    Args:
        twin: edge involution on darts.
        next: counterclockwise successor of each dart around its vertex.
        root: root dart; the root vertex is its tail.
    """

    __slots__ = ("twin", "next", "root", "_vert")

    def __init__(self, twin, next, root: int = 0):
        self.twin = _frozen(twin)
        self.next = _frozen(next)
        if self.twin.shape != self.next.shape or self.twin.ndim != 1:
            raise MapStructureError("twin and next must be 1-d arrays of equal length")
        if len(self.twin) % 2:
            raise MapStructureError("odd number of darts")
        if len(self.twin) and not 0 <= root < len(self.twin):
            raise MapStructureError("root out of range", root)
        self.root = int(root) if len(self.twin) else 0
        self._vert = None

    @classmethod
    def trivial(cls) -> CombMap:
        """The vertex map (no edges)."""
        return cls([], [], 0)

    @classmethod
    def single_edge(cls) -> CombMap:
        return cls([1, 0], [0, 1], 0)

    @classmethod
    def single_loop(cls) -> CombMap:
        return cls([1, 0], [1, 0], 0)

    @property
    def n_edges(self) -> int:
        return len(self.twin) // 2

    def vertex_of(self) -> tuple[np.ndarray, int]:
        """Vertex id per dart and the number of vertices."""
        if self._vert is None:
            if self.n_edges == 0:
                self._vert = (np.zeros(0, np.int64), 1)
            else:
                self._vert = K.orbit_labels(self.next)
        return self._vert

    def faces(self) -> tuple[np.ndarray, int]:
        if self.n_edges == 0:
            return np.zeros(0, np.int64), 1
        return K.orbit_labels(K.face_perm(self.twin, self.next))

    def __eq__(self, other) -> bool:
        if not isinstance(other, CombMap):
            return NotImplemented
        return (
            self.root == other.root
            and np.array_equal(self.twin, other.twin)
            and np.array_equal(self.next, other.next)
        )

    def __hash__(self) -> int:
        return hash((self.root, self.twin.tobytes(), self.next.tobytes()))

    def __repr__(self) -> str:
        return f"CombMap(n_edges={self.n_edges}, root={self.root})"

    # text format: "n; root; twin...; next..."
    def to_text(self) -> str:
        tw = " ".join(map(str, self.twin.tolist()))
        nx = " ".join(map(str, self.next.tolist()))
        return f"{self.n_edges}; {self.root}; {tw}; {nx}"

    @classmethod
    def from_text(cls, line: str) -> CombMap:
        parts = [p.strip() for p in line.split(";")]
        if len(parts) != 4:
            raise MapStructureError(f"expected 4 fields, got {len(parts)}")
        n, root = int(parts[0]), int(parts[1])
        tw = [int(x) for x in parts[2].split()]
        nx = [int(x) for x in parts[3].split()]
        if len(tw) != 2 * n or len(nx) != 2 * n:
            raise MapStructureError("dart tables do not match the edge count")
        return cls(tw, nx, root)


@dataclass(frozen=True)
class BlockDecomposition:
    blocks: list            # list of frozensets of edge ids
    cut_vertices: frozenset
    vertex_block_incidence: np.ndarray
    edge_block: np.ndarray  # block id per edge

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)


def validate(m: CombMap) -> bool:
    """True iff ``m`` is a connected genus-0 rotation system.

    Raises:
        MapStructureError: if ``twin`` or ``next`` is not a permutation, or
            ``twin`` has fixed points or is not an involution.
    """
    if m.n_edges == 0:
        return True
    bad = K.check_perm(m.twin)
    if bad >= 0:
        raise MapStructureError("twin is not a permutation", bad)
    bad = K.check_perm(m.next)
    if bad >= 0:
        raise MapStructureError("next is not a permutation", bad)
    idx = np.arange(len(m.twin))
    fixed = np.flatnonzero(m.twin == idx)
    if len(fixed):
        raise MapStructureError("twin has a fixed point", int(fixed[0]))
    nonin = np.flatnonzero(m.twin[m.twin] != idx)
    if len(nonin):
        raise MapStructureError("twin is not an involution", int(nonin[0]))
    if not K.connected(m.twin, m.next):
        return False
    V, E, F, _ = euler_stats(m)
    return V - E + F == 2


def euler_stats(m: CombMap) -> tuple[int, int, int, int]:
    """``(V, E, F, root_degree)``; loops count twice towards the degree."""
    if m.n_edges == 0:
        return 1, 0, 1, 0
    _, nv = m.vertex_of()
    _, nf = m.faces()
    deg = 1
    d = int(m.next[m.root])
    while d != m.root:
        deg += 1
        d = int(m.next[d])
    return nv, m.n_edges, nf, deg


def blocks_and_cuts(m: CombMap) -> BlockDecomposition:
    """Blocks (2-connected pieces, bridges, loops) and cut vertices in linear time."""
    vert, nv = m.vertex_of()
    if m.n_edges == 0:
        return BlockDecomposition([], frozenset(), np.zeros(1, np.int64), np.zeros(0, np.int64))
    block, edge_of, nb = K.biconnected(m.twin, m.next, vert, nv)
    inc = K.block_incidence(block, edge_of, m.twin, vert, nv, nb)
    groups = [[] for _ in range(nb)]
    for e, b in enumerate(block.tolist()):
        groups[b].append(e)
    cuts = frozenset(np.flatnonzero(inc >= 2).tolist())
    return BlockDecomposition([frozenset(g) for g in groups], cuts, inc, block)


def canonical_code(m: CombMap) -> bytes:
    """Root-isomorphism invariant code (relabelled twin and next tables)."""
    if m.n_edges == 0:
        return b""
    return K.canonical_arrays(m.twin, m.next, m.root).tobytes()


def brute_force_cut_vertices(m: CombMap) -> frozenset:
    """Cut vertices straight from the edge-partition definition (exponential).

    ``v`` is a cut vertex if some split of the edges into two nonempty classes
    leaves ``v`` as the only vertex touched by both.
    """
    n = m.n_edges
    if n > 12:
        raise ValueError("brute force is limited to 12 edges")
    vert, nv = m.vertex_of()
    ends = []
    edge_of = {}
    for d in range(2 * n):
        t = int(m.twin[d])
        if d < t:
            edge_of[d] = edge_of[t] = len(ends)
            ends.append((int(vert[d]), int(vert[t])))
    cuts = set()
    # colour of edge 0 fixed to break the symmetry
    for mask in range(1, 1 << (n - 1)) if n > 1 else []:
        cls = [0] + [(mask >> i) & 1 for i in range(n - 1)]
        touched = [set(), set()]
        for e, (a, b) in enumerate(ends):
            touched[cls[e]].update((a, b))
        both = touched[0] & touched[1]
        if len(both) == 1:
            cuts |= both
    return frozenset(cuts)


def enumerate_all(n: int) -> Iterator[tuple[CombMap, float]]:
    """Every (labelled tree, sign) pair with ``n`` edges pushed through the bijection.

    Each rooted map with ``n`` edges comes out exactly ``n + 2`` times, once
    per choice of pointed vertex of its quadrangulation, so each item carries
    weight ``1/(n+2)``.
    """
    if not 0 <= n <= MAX_ENUM_N:
        raise ValueError(f"enumeration is limited to 0 <= n <= {MAX_ENUM_N}")
    if n == 0:
        yield CombMap.trivial(), 1.0
        return
    w = 1.0 / (n + 2)
    for up in dyck_words(n):
        for incr in itertools.product((-1, 0, 1), repeat=n):
            inc = np.array(incr, dtype=np.int64)
            for eps in (0, 1):
                tw, nx, r = K.map_from_tree(up, inc, eps)
                yield CombMap(tw, nx, r), w


def dyck_words(n: int) -> Iterator[np.ndarray]:
    """All Dyck words of semilength ``n`` as boolean arrays (True = up)."""
    word = np.zeros(2 * n, dtype=np.bool_)

    def rec(pos, ups, downs):
        if pos == 2 * n:
            yield word.copy()
            return
        if ups < n:
            word[pos] = True
            yield from rec(pos + 1, ups + 1, downs)
        if downs < ups:
            word[pos] = False
            yield from rec(pos + 1, ups, downs + 1)

    yield from rec(0, 0, 0)


def enumeration_totals(n: int) -> dict:
    """Exact totals over all rooted maps with ``n`` edges.

    Sums over the raw bijection stream are divided by ``n + 2``; every
    division is checked to be exact.
    """
    if n == 0:
        return {"n": 0, "maps": 1, "distinct": 1, "cut_vertices": 0, "blocks": 0,
                "vertices": 1, "root_not_cut": 0, "vertex_pairs": 1, "blocks_sq": 0}
    raw = {"maps": 0, "cut_vertices": 0, "blocks": 0, "vertices": 0,
           "root_not_cut": 0, "vertex_pairs": 0, "blocks_sq": 0}
    codes = set()
    for up in dyck_words(n):
        for incr in itertools.product((-1, 0, 1), repeat=n):
            inc = np.array(incr, dtype=np.int64)
            for eps in (0, 1):
                tw, nx, r = K.map_from_tree(up, inc, eps)
                nv, nf, cuts, nb, _ = K.map_statistics(tw, nx, r)
                raw["maps"] += 1
                raw["cut_vertices"] += cuts
                raw["blocks"] += nb
                raw["blocks_sq"] += nb * nb
                raw["vertices"] += nv
                raw["vertex_pairs"] += nv * nv
                raw["root_not_cut"] += 0 if K.root_cut(tw, nx, r) else 1
                codes.add(K.canonical_arrays(tw, nx, r).tobytes())
    out = {"n": n, "distinct": len(codes)}
    for k, v in raw.items():
        q, rem = divmod(v, n + 2)
        if rem:
            raise ArithmeticError(f"{k} total {v} is not divisible by n+2={n + 2}")
        out[k] = q
    return out
