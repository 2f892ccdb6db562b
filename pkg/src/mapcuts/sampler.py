"""Uniform random rooted planar maps via labelled trees and quadrangulations.

Pipeline for a map with ``n`` edges:

1. a uniform plane tree with ``n`` edges (cycle lemma on a shuffled word of
   ``n`` up-steps and ``n+1`` down-steps);
2. independent uniform label increments in ``{-1, 0, +1}`` along the edges;
3. the labelled tree, plus one extra vertex, becomes a pointed rooted
   quadrangulation with ``n`` faces (each corner is joined to the next corner
   in contour order carrying a label one smaller);
4. the quadrangulation becomes a map on one of its two vertex colour classes
   (one edge per face).

Every rooted quadrangulation with ``n`` faces has exactly ``n + 2`` vertices,
so each rooted map arises from exactly ``n + 2`` (tree, labels, sign) triples.
Forgetting the pointed vertex therefore keeps the distribution uniform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .mapstruct import CombMap, MapStructureError, euler_stats

__all__ = [
    "PlaneTree",
    "LabeledPlaneTree",
    "PointedQuadrangulation",
    "SeededRng",
    "make_rng",
    "sample_plane_tree",
    "sample_labels",
    "cvs",
    "tutte",
    "sample_map",
    "sample_map_stats",
]


class SeededRng:
    """A numpy ``Generator`` keyed by ``(seed, stream)``.

    Identical keys give identical draws; distinct streams are independent
    (``SeedSequence`` spawning via the entropy pair).
    """

    def __init__(self, seed: int, stream: int = 0):
        if seed < 0 or stream < 0:
            raise ValueError("seed and stream must be nonnegative")
        self.seed = int(seed)
        self.stream = int(stream)
        self.gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.seed, self.stream])))

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, stream={self.stream})"


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    return SeededRng(seed, stream).gen


def _gen(rng) -> np.random.Generator:
    return rng.gen if isinstance(rng, SeededRng) else rng


@dataclass(frozen=True)
class PlaneTree:
    """Plane tree stored as its Dyck word (True = step away from the root)."""
    dyck: np.ndarray

    @property
    def n_edges(self) -> int:
        return len(self.dyck) // 2

    def parents(self) -> np.ndarray:
        """Parent of each vertex (vertices numbered in preorder, root 0 has -1)."""
        return K.tree_from_dyck(self.dyck)[1]

    def corners(self) -> np.ndarray:
        """Vertex of each of the ``2n`` corners in contour order."""
        return K.tree_from_dyck(self.dyck)[0]

    def key(self) -> bytes:
        return np.packbits(self.dyck).tobytes() + bytes([self.n_edges % 256])


@dataclass(frozen=True)
class LabeledPlaneTree:
    tree: PlaneTree
    increments: np.ndarray     # label(child) - label(parent), indexed by child - 1

    @property
    def n_edges(self) -> int:
        return self.tree.n_edges

    def labels(self) -> np.ndarray:
        return K.labels_from_increments(self.tree.parents(), self.increments)

    def is_valid(self) -> bool:
        lab = self.labels()
        par = self.tree.parents()
        if len(lab) != self.n_edges + 1 or lab[0] != 0:
            return False
        return bool(np.all(np.abs(lab[1:] - lab[par[1:]]) <= 1))


@dataclass(frozen=True)
class PointedQuadrangulation:
    quad: CombMap
    vertex_of_dart: np.ndarray
    pointed: int               # vertex id of the extra vertex
    labels: np.ndarray         # per vertex, the pointed vertex carries min - 1


def sample_plane_tree(n: int, rng) -> PlaneTree:
    """Uniform plane tree with ``n`` edges in linear time.

    A uniformly shuffled word with ``n`` up-steps and ``n + 1`` down-steps has
    exactly one rotation whose proper prefixes stay nonnegative; that rotation
    minus its final down-step is a uniform Dyck word.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    g = _gen(rng)
    steps = np.full(2 * n + 1, -1, dtype=np.int64)
    steps[:n] = 1
    g.shuffle(steps)
    start = K.cycle_lemma_start(steps)
    word = np.roll(steps, -start)[: 2 * n] > 0
    return PlaneTree(word)


def sample_labels(tree: PlaneTree, rng) -> LabeledPlaneTree:
    g = _gen(rng)
    inc = g.integers(-1, 2, size=tree.n_edges, dtype=np.int64)
    return LabeledPlaneTree(tree, inc)


def cvs(t: LabeledPlaneTree, eps: int) -> PointedQuadrangulation:
    """Labelled tree and sign -> pointed rooted quadrangulation with ``n`` faces.

    Arc ``k`` leaves corner ``k`` of the contour and ends at the successor
    corner (or at the pointed vertex for corners of minimal label). The root
    is arc 0, oriented away from the root corner when ``eps == 0`` and
    towards it when ``eps == 1``.
    """
    if eps not in (0, 1):
        raise ValueError("eps must be 0 or 1")
    n = t.n_edges
    cv = t.tree.corners()
    lab = t.labels()
    twin, nxt, vert, _ = K.build_quadrangulation(cv, lab, eps)
    q = CombMap(twin, nxt, eps)
    V, E, F, _ = euler_stats(q)
    flab, _ = q.faces()
    if F != n or V != n + 2 or np.any(np.bincount(flab) != 4):
        raise MapStructureError(f"quadrangulation postcondition failed (V={V}, F={F})")
    full = np.empty(n + 2, np.int64)
    full[: n + 1] = lab
    full[n + 1] = lab.min() - 1
    return PointedQuadrangulation(q, vert, n + 1, full)


def tutte(pq: PointedQuadrangulation) -> CombMap:
    """Map on the colour class of the root's tail; one edge per face.

    For a dart ``a`` leaving a vertex of that class, the opposite dart of the
    new edge is ``twin(next(twin(next(a))))``: the far black corner of the
    face on the counterclockwise side of ``a``.
    """
    q = pq.quad
    vert = pq.vertex_of_dart
    color = (pq.labels - pq.labels.min()) & 1
    # adjacent vertices must differ in colour
    if np.any(color[vert[q.twin]] == color[vert]):
        raise MapStructureError("quadrangulation is not bipartite")
    tw, nx, r = K.quad_to_map(q.twin, q.next, vert, color.astype(np.int64), q.root)
    return CombMap(tw, nx, r)


def sample_map(n: int, rng) -> CombMap:
    """Uniform rooted planar map with ``n`` edges (``n = 0`` gives the vertex map)."""
    if n == 0:
        return CombMap.trivial()
    tw, nx, r = _sample_arrays(n, _gen(rng))
    return CombMap(tw, nx, r)


def _sample_arrays(n: int, g: np.random.Generator):
    steps = np.full(2 * n + 1, -1, dtype=np.int64)
    steps[:n] = 1
    g.shuffle(steps)
    start = K.cycle_lemma_start(steps)
    word = np.roll(steps, -start)[: 2 * n] > 0
    inc = g.integers(-1, 2, size=n, dtype=np.int64)
    eps = int(g.integers(0, 2))
    return K.map_from_tree(word, inc, eps)


def sample_map_stats(n: int, rng) -> dict:
    """Sample one map and return its statistics without building a :class:`CombMap`."""
    tw, nx, r = _sample_arrays(n, _gen(rng))
    nv, nf, cuts, nb, deg = K.map_statistics(tw, nx, r)
    if nv - n + nf != 2:
        raise MapStructureError("sampled map is not planar")
    return {"n": n, "cut_vertices": int(cuts), "blocks": int(nb), "vertices": int(nv),
            "root_degree": int(deg)}
