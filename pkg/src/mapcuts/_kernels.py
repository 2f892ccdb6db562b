"""Compiled inner loops for maps: orbits, biconnectivity, the tree-to-map pipeline.

Conventions shared by everything here: a map on ``n`` edges has darts
``0..2n-1``; ``nxt`` is the counterclockwise rotation around a vertex and
``twin`` the edge involution. Arrays are ``int64``.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def orbit_labels(perm):
    """Label each element by the index of its cycle in ``perm``; return (labels, count)."""
    m = perm.shape[0]
    lab = np.full(m, -1, np.int64)
    k = 0
    for s in range(m):
        if lab[s] >= 0:
            continue
        d = s
        while lab[d] < 0:
            lab[d] = k
            d = perm[d]
        k += 1
    return lab, k


@njit(cache=True, nogil=True)
def face_perm(twin, nxt):
    m = twin.shape[0]
    out = np.empty(m, np.int64)
    for d in range(m):
        out[d] = nxt[twin[d]]
    return out


@njit(cache=True, nogil=True)
def check_perm(p):
    """Index of the first offending entry, or -1 if ``p`` is a permutation."""
    m = p.shape[0]
    seen = np.zeros(m, np.bool_)
    for i in range(m):
        x = p[i]
        if x < 0 or x >= m or seen[x]:
            return i
        seen[x] = True
    return -1


@njit(cache=True, nogil=True)
def connected(twin, nxt):
    m = twin.shape[0]
    if m == 0:
        return True
    seen = np.zeros(m, np.bool_)
    stack = np.empty(m, np.int64)
    top = 0
    stack[0] = 0
    seen[0] = True
    top = 1
    cnt = 1
    while top > 0:
        top -= 1
        d = stack[top]
        for e in (twin[d], nxt[d]):
            if not seen[e]:
                seen[e] = True
                stack[top] = e
                top += 1
                cnt += 1
    return cnt == m


@njit(cache=True, nogil=True)
def biconnected(twin, nxt, vert, nv):
    """Block id per edge and number of blocks, for a connected multigraph map.

    Edge ids come from ``edge_of``: edge ``e`` owns darts ``d`` with
    ``min(d, twin[d]) == rep[e]``. Loops are blocks on their own; parallel
    edges are told apart by edge id, so a second edge to the DFS parent is a
    back edge.
    """
    m = twin.shape[0]
    edge_of = np.full(m, -1, np.int64)
    ne = 0
    for d in range(m):
        if edge_of[d] < 0:
            edge_of[d] = ne
            edge_of[twin[d]] = ne
            ne += 1
    block = np.full(ne, -1, np.int64)
    nb = 0
    # loops first
    for d in range(m):
        if d < twin[d] and vert[d] == vert[twin[d]]:
            block[edge_of[d]] = nb
            nb += 1
    if m == 0:
        return block, edge_of, nb
    first = np.full(nv, -1, np.int64)
    for d in range(m):
        if first[vert[d]] < 0:
            first[vert[d]] = d
    disc = np.full(nv, -1, np.int64)
    low = np.zeros(nv, np.int64)
    # DFS frame: vertex, parent edge, current dart, whether the rotation has started
    fv = np.empty(nv, np.int64)
    fpe = np.empty(nv, np.int64)
    fcur = np.empty(nv, np.int64)
    fstarted = np.zeros(nv, np.bool_)
    estack = np.empty(ne, np.int64)
    etop = 0
    t = 0
    root = vert[0]
    disc[root] = t
    low[root] = t
    t += 1
    sp = 0
    fv[0] = root
    fpe[0] = -1
    fcur[0] = first[root]
    fstarted[0] = False
    sp = 1
    while sp > 0:
        v = fv[sp - 1]
        d = fcur[sp - 1]
        if fstarted[sp - 1] and d == first[v]:
            # rotation exhausted: return to parent
            sp -= 1
            if sp > 0:
                p = fv[sp - 1]
                pe = fpe[sp]
                if low[v] < low[p]:
                    low[p] = low[v]
                if low[v] >= disc[p]:
                    while True:
                        etop -= 1
                        e = estack[etop]
                        block[e] = nb
                        if e == pe:
                            break
                    nb += 1
            continue
        fstarted[sp - 1] = True
        fcur[sp - 1] = nxt[d]
        e = edge_of[d]
        w = vert[twin[d]]
        if w == v or e == fpe[sp - 1]:
            continue
        if disc[w] < 0:
            estack[etop] = e
            etop += 1
            disc[w] = t
            low[w] = t
            t += 1
            fv[sp] = w
            fpe[sp] = e
            fcur[sp] = first[w]
            fstarted[sp] = False
            sp += 1
        elif disc[w] < disc[v]:
            estack[etop] = e
            etop += 1
            if disc[w] < low[v]:
                low[v] = disc[w]
    return block, edge_of, nb


@njit(cache=True, nogil=True)
def block_incidence(block, edge_of, twin, vert, nv, nb):
    """Number of distinct blocks touching each vertex."""
    m = twin.shape[0]
    inc = np.zeros(nv, np.int64)
    mark = np.full(nv, -1, np.int64)
    # group darts by block
    cnt = np.zeros(nb + 1, np.int64)
    for d in range(m):
        cnt[block[edge_of[d]] + 1] += 1
    for b in range(nb):
        cnt[b + 1] += cnt[b]
    pos = cnt.copy()
    order = np.empty(m, np.int64)
    for d in range(m):
        b = block[edge_of[d]]
        order[pos[b]] = d
        pos[b] += 1
    for b in range(nb):
        for k in range(cnt[b], cnt[b + 1]):
            v = vert[order[k]]
            if mark[v] != b:
                mark[v] = b
                inc[v] += 1
    return inc


@njit(cache=True, nogil=True)
def canonical_arrays(twin, nxt, root):
    """Relabel darts in first-visit order of a BFS from ``root`` (next, then twin)."""
    m = twin.shape[0]
    new = np.full(m, -1, np.int64)
    queue = np.empty(m, np.int64)
    new[root] = 0
    queue[0] = root
    head = 0
    tail = 1
    while head < tail:
        d = queue[head]
        head += 1
        for e in (nxt[d], twin[d]):
            if new[e] < 0:
                new[e] = tail
                queue[tail] = e
                tail += 1
    out = np.empty(2 * m, np.int64)
    for d in range(m):
        out[new[d]] = new[twin[d]]
        out[m + new[d]] = new[nxt[d]]
    return out


# ---------------------------------------------------------------------------
# labeled tree -> pointed quadrangulation -> map
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def cycle_lemma_start(steps):
    """Start index of the unique rotation of a +-1 sequence with sum -1 whose
    proper prefixes are all nonnegative."""
    s = 0
    best = 1
    arg = 0
    for i in range(steps.shape[0]):
        s += steps[i]
        if s < best:
            best = s
            arg = i
    return (arg + 1) % steps.shape[0]


@njit(cache=True, nogil=True)
def tree_from_dyck(up):
    """Corner vertices and parents for the plane tree of a Dyck word.

    ``up`` has length ``2n``; vertex ids are in order of creation (root 0).
    Returns ``(corner_vertex[2n], parent[n+1])``.
    """
    m = up.shape[0]
    n = m // 2
    cv = np.empty(m, np.int64)
    parent = np.full(n + 1, -1, np.int64)
    stack = np.empty(n + 1, np.int64)
    stack[0] = 0
    top = 1
    nv = 1
    for i in range(m):
        v = stack[top - 1]
        cv[i] = v
        if up[i]:
            parent[nv] = v
            stack[top] = nv
            top += 1
            nv += 1
        else:
            top -= 1
    return cv, parent


@njit(cache=True, nogil=True)
def labels_from_increments(parent, incr):
    n1 = parent.shape[0]
    lab = np.zeros(n1, np.int64)
    for v in range(1, n1):
        lab[v] = lab[parent[v]] + incr[v - 1]
    return lab


@njit(cache=True, nogil=True)
def corner_successors(cl):
    """Successor of each corner: next corner cyclically with label one less, or -1."""
    m = cl.shape[0]
    lo = cl.min()
    hi = cl.max()
    nxt_pos = np.full(hi - lo + 2, -1, np.int64)
    succ = np.full(m, -1, np.int64)
    for p in range(2 * m - 1, -1, -1):
        c = p % m
        l = cl[c] - lo
        if p < m and l > 0:
            q = nxt_pos[l - 1]
            succ[c] = q % m if q >= 0 else -1
        nxt_pos[l] = p
    return succ


@njit(cache=True, nogil=True)
def build_quadrangulation(cv, lab, eps):
    """Pointed rooted quadrangulation from a labeled tree given by its corners.

    Arc ``k`` leaves corner ``k``: dart ``2k`` sits at the corner's vertex and
    dart ``2k+1`` at its successor (the extra vertex ``n+1`` for corners of
    minimal label). The root is dart ``eps`` (the arc from the root corner).
    Returns ``(twin, nxt, vert, succ)``.
    """
    m = cv.shape[0]          # 2n corners = 2n arcs
    nv_tree = m // 2 + 1
    vstar = nv_tree
    cl = np.empty(m, np.int64)
    for i in range(m):
        cl[i] = lab[cv[i]]
    succ = corner_successors(cl)
    nd = 2 * m
    twin = np.empty(nd, np.int64)
    vert = np.empty(nd, np.int64)
    for k in range(m):
        twin[2 * k] = 2 * k + 1
        twin[2 * k + 1] = 2 * k
        vert[2 * k] = cv[k]
        vert[2 * k + 1] = vstar if succ[k] < 0 else cv[succ[k]]
    # incoming arcs per corner, farthest source first
    indeg = np.zeros(m + 1, np.int64)
    for i in range(m):
        if succ[i] >= 0:
            indeg[succ[i] + 1] += 1
    off = np.cumsum(indeg)
    fill = off[:m].copy()
    inc = np.empty(max(off[m], 1), np.int64)
    for i in range(m):
        j = succ[i]
        if j >= 0 and i > j:
            inc[fill[j]] = i
            fill[j] += 1
    for i in range(m):
        j = succ[i]
        if j >= 0 and i < j:
            inc[fill[j]] = i
            fill[j] += 1
    # corners per tree vertex
    ccount = np.zeros(nv_tree + 1, np.int64)
    for i in range(m):
        ccount[cv[i] + 1] += 1
    coff = np.cumsum(ccount)
    cfill = coff[:nv_tree].copy()
    corners = np.empty(m, np.int64)
    for i in range(m):
        v = cv[i]
        corners[cfill[v]] = i
        cfill[v] += 1
    nxt = np.empty(nd, np.int64)
    seq = np.empty(nd, np.int64)
    for v in range(nv_tree):
        L = 0
        for t in range(coff[v + 1] - 1, coff[v] - 1, -1):
            j = corners[t]
            seq[L] = 2 * j
            L += 1
            for s in range(off[j], off[j + 1]):
                seq[L] = 2 * inc[s] + 1
                L += 1
        for t in range(L):
            nxt[seq[t]] = seq[(t + 1) % L]
    L = 0
    for i in range(m):
        if succ[i] < 0:
            seq[L] = 2 * i + 1
            L += 1
    for t in range(L):
        nxt[seq[t]] = seq[(t + 1) % L]
    return twin, nxt, vert, succ


@njit(cache=True, nogil=True)
def quad_to_map(twin, nxt, vert, color, root):
    """Map on the colour class of ``root``'s tail: one edge per quadrangle.

    Returns ``(twin, nxt, root)`` of the map with darts relabelled so that
    edge ``e`` owns darts ``2e, 2e+1``.
    """
    nd = twin.shape[0]
    black = color[vert[root]]
    new = np.full(nd, -1, np.int64)
    k = 0
    for a in range(nd):
        if color[vert[a]] != black or new[a] >= 0:
            continue
        b = twin[nxt[twin[nxt[a]]]]
        new[a] = k
        new[b] = k + 1
        k += 2
    mtwin = np.empty(k, np.int64)
    mnxt = np.empty(k, np.int64)
    for a in range(nd):
        if new[a] < 0:
            continue
        mtwin[new[a]] = new[twin[nxt[twin[nxt[a]]]]]
        mnxt[new[a]] = new[nxt[a]]
    return mtwin, mnxt, new[root]


@njit(cache=True, nogil=True)
def map_from_tree(up, incr, eps):
    """Fused pipeline used by the sampler: Dyck word, increments, root sign -> map."""
    cv, parent = tree_from_dyck(up)
    lab = labels_from_increments(parent, incr)
    twin, nxt, vert, succ = build_quadrangulation(cv, lab, eps)
    nvq = lab.shape[0] + 1
    lo = lab.min()
    color = np.empty(nvq, np.int64)
    for v in range(nvq - 1):
        color[v] = (lab[v] - lo + 1) & 1
    color[nvq - 1] = 0
    return quad_to_map(twin, nxt, vert, color, eps)


@njit(cache=True, nogil=True)
def map_statistics(twin, nxt, root):
    """(vertices, faces, cut vertices, blocks, root degree) of a map."""
    m = twin.shape[0]
    if m == 0:
        return 1, 1, 0, 0, 0
    vert, nv = orbit_labels(nxt)
    fp = face_perm(twin, nxt)
    _, nf = orbit_labels(fp)
    block, edge_of, nb = biconnected(twin, nxt, vert, nv)
    inc = block_incidence(block, edge_of, twin, vert, nv, nb)
    cuts = 0
    for v in range(nv):
        if inc[v] >= 2:
            cuts += 1
    deg = 0
    d = root
    while True:
        deg += 1
        d = nxt[d]
        if d == root:
            break
    return nv, nf, cuts, nb, deg


@njit(cache=True, nogil=True)
def root_cut(twin, nxt, root):
    """Whether the root vertex lies in two or more blocks."""
    vert, nv = orbit_labels(nxt)
    block, edge_of, nb = biconnected(twin, nxt, vert, nv)
    inc = block_incidence(block, edge_of, twin, vert, nv, nb)
    return inc[vert[root]] >= 2
