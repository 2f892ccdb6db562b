"""Generating functions for rooted planar maps, their blocks and cut vertices.

Everything is computed with exact rational series from :mod:`mapcuts.qseries`.
Notation (``z`` marks edges throughout):

* ``M(z)``: all rooted maps, ``M(z,u)``: ``u`` marks the root face valency.
* ``V(z)``: root of ``z = V(1-V)^2``; ``u1(z) = 1/(1-V)`` solves ``u = 1 + z u^3``.
* ``B(z,x,u)``: non-separable maps with at least two edges, ``x`` marking
  non-root faces. ``A = B + zxu + zu^2`` adds the single edge and the loop.
* ``Ea(z)``: sum over maps of their number of cut vertices.
* ``M0(z)``: maps with at least one edge whose root vertex is not a cut vertex.

Series with an order-reducing division (by ``z``, by ``V``, by ``w - u1``) are
computed at a padded order and truncated at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import mpmath
from gmpy2 import mpq

from .qseries import (
    BranchError,
    CatalyticSeries,
    PowerSeries,
    SeriesError,
    Z,
    align,
    gsqrt,
    ps_compose,
    ps_eval,
    ps_newton_implicit,
    ps_revert,
    rational,
)

__all__ = [
    "GfBundle",
    "CltConstants",
    "mn_closed",
    "series_M",
    "series_M_catalytic",
    "series_V_u1",
    "series_B",
    "series_B_functional",
    "series_B_functional_dx",
    "series_Bx_Bz",
    "series_Q",
    "series_Bbullet",
    "series_Ea",
    "series_M0",
    "series_A_composed",
    "series_blocks",
    "block_moment_series",
    "degree_series",
    "q_closed_form",
    "prob_root_cut",
    "clt_constants",
    "rho_blocks",
    "block_means",
    "cut_vertex_means",
    "vertex_moments",
    "select_q_branch",
    "q_closed_form_principal",
    "singular_value",
    "least_squares_slope",
    "estimate_c_from_series",
    "singular_amplitude",
    "singular_constant_check",
    "build_bundle",
]

HALF = mpq(1, 2)


class ConsistencyError(SeriesError):
    pass


def _mpf(x):
    """mpmath number from an int, float, mpq or mpmath value."""
    if isinstance(x, (mpmath.mpf, mpmath.mpc)):
        return x
    if isinstance(x, (int, float)):
        return mpmath.mpf(x)
    x = rational(x)
    return mpmath.mpf(int(x.numerator)) / int(x.denominator)


# ---------------------------------------------------------------------------
# general maps
# ---------------------------------------------------------------------------

def mn_closed(n: int) -> int:
    """Number of rooted planar maps with ``n`` edges: ``2 (2n)! 3^n / ((n+2)! n!)``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    num = 2 * math.factorial(2 * n) * 3**n
    den = math.factorial(n + 2) * math.factorial(n)
    q, r = divmod(num, den)
    assert r == 0
    return q


def series_M(N: int) -> PowerSeries:
    """``M(z) = (18z - 1 + (1-12z)^{3/2}) / (54 z^2)`` to order ``N``."""
    z = Z(N + 2)
    s = (1 - 12 * z).sqrt()
    num = 18 * z - 1 + (1 - 12 * z) * s
    return num.shift(-2) / 54


def series_M_catalytic(N: int) -> CatalyticSeries:
    """``M(z,u)`` from the root-edge deletion equation, order by order.

    ``M_n(u) = u^2 [z^{n-1}] M(z,u)^2 + u (u M_{n-1}(u) - M_{n-1}(1)) / (u - 1)``
    """
    from .qseries import _padd, _pdiv_linear, _pmul, _psub, _ptrim

    rows = [[mpq(1)]]
    for n in range(1, N + 1):
        sq = [mpq(0)]
        for i in range(n):
            sq = _padd(sq, _pmul(rows[i], rows[n - 1 - i]))
        prev = rows[n - 1]
        at1 = sum(prev, mpq(0))
        num = _psub([mpq(0)] + list(prev), [at1])
        try:
            quot = _pdiv_linear(_ptrim(num), mpq(1))
        except SeriesError as exc:
            raise ConsistencyError(f"(u-1) division fails at order {n}: {exc}") from None
        row = _padd([mpq(0), mpq(0)] + sq, [mpq(0)] + quot)
        rows.append(_ptrim(row))
    out = CatalyticSeries(rows, N, name="u")
    out.check_degree(lambda n: 2 * n)
    return out


def _solve_V(y: PowerSeries) -> PowerSeries:
    """``W`` with ``W (1-W)^2 = y`` and ``W(0) = 0`` (needs ``y(0) = 0``)."""
    return ps_newton_implicit(lambda w: w * (1 - w) ** 2 - y, PowerSeries([0], y.order))


def series_V_u1(N: int) -> tuple[PowerSeries, PowerSeries]:
    z = Z(N)
    V = _solve_V(z)
    u1 = ps_newton_implicit(lambda u: 1 + z * u**3 - u, PowerSeries([1], N))
    if u1 * (1 - V) != PowerSeries.constant(1, N):
        raise ConsistencyError("u1 (1 - V) != 1")
    return V, u1


def _B_closed(W, u):
    """Non-separable maps ``B(., 1, u)`` written through ``W = V(.)``.

    ``W`` is a series (already composed if needed); ``u`` a series, a
    catalytic variable or a number. With ``U = V = W``::

        B = -(1 - c1 u + c2 u^2)/2 + (1 - (1-W) u) sqrt(1 - 2 e1 u + e2 u^2) / 2
        c1 = 1 + W^2 - 2W^3,  c2 = W (1-W)^2,
        e1 = W (1 + W - 2W^2), e2 = W^2 (1-W)^2
    """
    W2 = W * W
    c1 = 1 + W2 - 2 * W2 * W
    c2 = W * (1 - W) ** 2
    e1 = W * (1 + W - 2 * W2)
    e2 = W2 * (1 - W) ** 2
    if isinstance(u, CatalyticSeries):
        c1, c2, e1, e2, omw = (CatalyticSeries.from_series(s, u.name) for s in (c1, c2, e1, e2, 1 - W))
        rad = 1 - 2 * e1 * u + e2 * u * u
        return -HALF * (1 - c1 * u + c2 * u * u) + HALF * (1 - omw * u) * rad.sqrt()
    rad = 1 - 2 * e1 * u + e2 * u * u
    return -HALF * (1 - c1 * u + c2 * u * u) + HALF * (1 - (1 - W) * u) * gsqrt(rad)


def series_B(N: int, V: PowerSeries | None = None) -> CatalyticSeries:
    """``B(z,1,u)`` from the explicit two-term radical formula."""
    if V is None:
        V = _solve_V(Z(N))
    u = CatalyticSeries.variable(N, "u")
    B = _B_closed(V, u)
    if any(B[0]) or any(B[1]):
        raise BranchError("explicit formula does not vanish at orders 0 and 1")
    B.check_degree(lambda n: n + 1)
    return B


def series_B_functional(N: int, x=1) -> CatalyticSeries:
    """``B(z,x,u)`` straight from the root-edge deletion equation.

    Cleared of denominators the equation reads
    ``(1-u) B = (B + zxu)(u B(z,x,1) - B + zu(1-u))``; the right side at
    ``z^n`` only involves lower orders and vanishes at ``u = 1``.
    """
    from .qseries import _padd, _pdiv_linear, _pmul, _psub, _pscale, _ptrim

    x = rational(x)
    zero = [mpq(0)]
    rows = [zero, zero]
    ones = [mpq(0), mpq(0)]            # B_n(1)
    for n in range(2, N + 1):
        r = [mpq(0)]
        for k in range(2, n - 1):
            # u B_k B1_{n-k} - B_k B_{n-k}
            r = _padd(r, _pscale([mpq(0)] + rows[k], ones[n - k]))
            r = _psub(r, _pmul(rows[k], rows[n - k]))
        p = rows[n - 1]
        # z u (1-u) B_{n-1} - z x u B_{n-1}
        r = _padd(r, _pmul([mpq(0), 1 - x, mpq(-1)], p))
        # z x u^2 B1_{n-1}
        r = _padd(r, [mpq(0), mpq(0), x * ones[n - 1]])
        if n == 2:
            # z^2 x u^2 (1-u)
            r = _padd(r, [mpq(0), mpq(0), x, -x])
        try:
            q = _pdiv_linear(_ptrim(_pscale(r, -1)), mpq(1))
        except SeriesError as exc:
            raise ConsistencyError(f"(1-u) division fails at order {n}: {exc}") from None
        q = _ptrim(q)
        rows.append(q)
        ones.append(sum(q, mpq(0)))
    return CatalyticSeries(rows, N, name="u")


def series_B_functional_dx(N: int) -> CatalyticSeries:
    """``C = dB/dx`` at ``x = 1`` from the differentiated equation.

    ``(1-u) C = (C + zu)(u B1 - B + zu(1-u)) + (B + zu)(u C1 - C)``
    """
    from .qseries import _padd, _pdiv_linear, _pmul, _psub, _pscale, _ptrim

    B = series_B_functional(N, 1)
    b = B.coeffs
    b1 = [sum(p, mpq(0)) for p in b]
    rows = [[mpq(0)], [mpq(0)]]
    c1 = [mpq(0), mpq(0)]
    for n in range(2, N + 1):
        r = [mpq(0)]
        for k in range(2, n - 1):
            r = _padd(r, _pscale([mpq(0)] + rows[k], b1[n - k]))   # u C B1
            r = _padd(r, _pscale([mpq(0)] + b[k], c1[n - k]))      # u B C1
            r = _psub(r, _pscale(_pmul(b[k], rows[n - k]), 2))     # -2 B C
        cp = rows[n - 1]
        bp = b[n - 1]
        r = _padd(r, _pmul([mpq(0), mpq(0), mpq(-1)], cp))          # zu(1-u)C - zuC
        r = _padd(r, [mpq(0), mpq(0), b1[n - 1] + c1[n - 1]])       # z u^2 (B1 + C1)
        r = _psub(r, [mpq(0)] + bp)                                  # -z u B
        if n == 2:
            r = _padd(r, [mpq(0), mpq(0), mpq(1), mpq(-1)])          # z^2 u^2 (1-u)
        try:
            q = _ptrim(_pdiv_linear(_ptrim(_pscale(r, -1)), mpq(1)))
        except SeriesError as exc:
            raise ConsistencyError(f"(1-u) division fails at order {n}: {exc}") from None
        rows.append(q)
        c1.append(sum(q, mpq(0)))
    return CatalyticSeries(rows, N, name="u")


def series_Q(N: int) -> PowerSeries:
    """``Q = V^2/(u1-1) - u1 B(z,1,1)/(u1-1) + z u1``, i.e. ``V(1-V) - B/V + z/(1-V)``."""
    P = N + 1
    V = _solve_V(Z(P))
    return _Q_from(V, Z(P)).truncate(N)


def _Q_from(W: PowerSeries, y: PowerSeries) -> PowerSeries:
    B1 = _B_closed(W, 1)
    BW = B1 / W                         # loses one order
    W, y = align(W, y, BW)[:2]
    return W * (1 - W) - BW + y / (1 - W)


def _Bx_Bz_from(W: PowerSeries, y: PowerSeries) -> tuple[PowerSeries, PowerSeries]:
    Q = _Q_from(W, y)
    W, y = align(W, y, Q)[:2]
    t = W * Q * (1 - Q)                 # (u1-1)/u1 = V
    ty = t / y                          # loses one more order
    W, t = align(W, t, ty)[:2]
    return t, ty + 1 / (1 - W) - 1


def series_Bx_Bz(N: int) -> tuple[PowerSeries, PowerSeries]:
    """``B_x(z,1,1)`` and ``B_z(z,1,1)`` from the kernel-method closed forms.

    With ``u1 = 1/(1-V)`` one has ``(u1-1)/u1 = V``, hence
    ``Bx = V Q (1-Q)`` and ``Bz = V Q (1-Q) / z + u1 - 1``.
    """
    P = N + 2
    V = _solve_V(Z(P))
    Bx, Bz = _Bx_Bz_from(V, Z(P))
    return Bx.truncate(N), Bz.truncate(N)


def series_Bbullet(N: int) -> CatalyticSeries:
    """``B*(z,1,1,w)``: non-separable maps with a marked non-root vertex, ``w``
    marking its degree.

    ``B* = z w (T + z w u1) / (1 - T - z w u1)`` with
    ``T = (u1 B(z,1,w) - w B(z,1,u1)) / (w - u1)`` and ``B(z,1,u1) = V^2``.
    The division by ``w - u1(z)`` is exact.
    """
    V, u1 = series_V_u1(N)
    B = series_B(N, V)
    w = CatalyticSeries.variable(N, "w")
    Bw = CatalyticSeries(B.coeffs, N, name="w")
    num = CatalyticSeries.from_series(u1, "w") * Bw - w * CatalyticSeries.from_series(V * V, "w")
    try:
        T = num.div_linear(u1)
    except SeriesError as exc:
        raise ConsistencyError(f"kernel cancellation failed: {exc}") from None
    zwu = CatalyticSeries.from_series(Z(N) * u1, "w").times_var(1)
    zw = CatalyticSeries.from_series(Z(N), "w").times_var(1)
    return zw * (T + zwu) / (1 - T - zwu)


@dataclass
class _Composed:
    """Ingredients of the cut-vertex formula, all composed at ``y = z M^2``."""
    z: PowerSeries
    M: PowerSeries
    y: PowerSeries
    W: PowerSeries      # V(y)
    u1: PowerSeries     # u1(y)
    B1: PowerSeries     # B(y,1,1)
    Bm: PowerSeries     # B(y,1,1/M)
    Bx: PowerSeries     # B_x(y,1,1)
    Bz: PowerSeries     # B_z(y,1,1)
    Bb: PowerSeries     # B*(y,1,1,1/M)


def _composed(N: int, pad: int = 4) -> _Composed:
    P = N + pad
    z = Z(P)
    M = series_M(P)
    y = z * M * M
    W = _solve_V(y)
    w = 1 / M
    u1 = 1 / (1 - W)
    B1 = _B_closed(W, 1)
    Bm = _B_closed(W, w)
    Bx, Bz = _Bx_Bz_from(W, y)
    # B*(y,1,1,w) = y w (T + y w u1) / (1 - T - y w u1),
    # T = (u1 B(y,1,w) - w W^2) / (w - u1); w - u1 has valuation 1
    T = (u1 * Bm - w * W * W) / (w - u1)
    y_, w_, u1_ = align(y, w, u1, T)[:3]
    ywu = y_ * w_ * u1_
    Bb = y_ * w_ * (T + ywu) / (1 - T - ywu)
    parts = align(z, M, y, W, u1, B1, Bm, Bx, Bz, Bb)
    return _Composed(*(p.truncate(N) for p in parts))


def series_A_composed(N: int) -> tuple[PowerSeries, PowerSeries, PowerSeries]:
    """``A(zM^2,1,1)``, ``A_x(zM^2,1,1)``, ``A_z(zM^2,1,1)``.

    At ``x = u = 1``: ``A = B + 2z``, ``A_x = B_x + z``, ``A_z = B_z + 2``
    (all evaluated at ``zM^2``).
    """
    c = _composed(N)
    return c.B1 + 2 * c.y, c.Bx + c.y, c.Bz + 2


def series_Ea(N: int) -> PowerSeries:
    """Total number of cut vertices over all maps with ``n`` edges, as a series.

    ``Ea = [A + A_x - 2zM - z - Bm - B* + S (Bm - M + zM + z + 1)] / (1 - S)``
    with ``S = 2 z M A_z``; ``A``, ``A_x``, ``A_z``, ``B*`` at ``zM^2`` and
    ``Bm = B(zM^2, 1, 1/M)``.
    """
    c = _composed(N)
    z, M = c.z, c.M
    A = c.B1 + 2 * c.y
    Ax = c.Bx + c.y
    Az = c.Bz + 2
    S = 2 * z * M * Az
    zM = z * M
    num = A + Ax - 2 * zM - z - c.Bm - c.Bb + S * (c.Bm - M + zM + z + 1)
    return num / (1 - S)


def series_M0(N: int) -> PowerSeries:
    """Maps with at least one edge whose root vertex lies in a single block:
    ``B(zM^2, 1, 1/M) + zM + z``."""
    c = _composed(N)
    return c.Bm + c.z * c.M + c.z


# ---------------------------------------------------------------------------
# blocks
# ---------------------------------------------------------------------------

def _A_univariate(N: int) -> PowerSeries:
    B = series_B(N)
    return B.at(1) + 2 * Z(N)


def series_blocks(N: int) -> CatalyticSeries:
    """``M(z,w)`` with ``w`` marking non-root blocks: ``M = 1 + A(z (1 + w (M-1))^2)``.

    Solved by fixed-point iteration (one order per round); meant for small N.
    The total block count of a map with ``n >= 1`` edges is the ``w``-degree
    plus one.
    """
    A = _A_univariate(N)
    one = CatalyticSeries.from_series(PowerSeries.constant(1, N), "w")
    zc = CatalyticSeries.from_series(Z(N), "w")
    Mw = one
    for _ in range(N):
        h = one + (Mw - one).times_var(1)
        G = zc * h * h
        # Horner for A(G); G has no z^0 term
        acc = CatalyticSeries.from_series(PowerSeries.constant(A[N], N), "w")
        for k in range(N - 1, -1, -1):
            acc = acc * G + A[k]
        Mw = one + acc
    return Mw


def block_moment_series(N: int) -> tuple[PowerSeries, PowerSeries, PowerSeries]:
    """``(M, dM/dw, d^2M/dw^2)`` at ``w = 1`` without the bivariate solve.

    With ``Y = zM^2`` and ``M = 1 + A(Y)``:
    ``A'(Y) = M'/Y'``, ``A''(Y) = (A'(Y))'/Y'``,
    ``M_w (1 - 2zMA') = 2zM A' (M-1)`` and, with ``h = M - 1 + M_w``,
    ``M_ww (1 - 2zMA') = A'' (2zMh)^2 + 2z A' (h^2 + 2 M M_w)``.
    """
    P = N + 1
    z = Z(P)
    M = series_M(P)
    Y = z * M * M
    dY = Y.derivative()
    dM = M.derivative()
    M, z, Y = M.truncate(N), z.truncate(N), Y.truncate(N)
    A1 = dM / dY
    A2 = (A1.derivative() / dY.truncate(N - 1))
    A1t = A1.truncate(N - 1)
    M_, z_ = M.truncate(N - 1), z.truncate(N - 1)
    K = 1 - 2 * z_ * M_ * A1t
    Mw = 2 * z_ * M_ * A1t * (M_ - 1) / K
    h = M_ - 1 + Mw
    Mww = (A2 * (2 * z_ * M_ * h) ** 2 + 2 * z_ * A1t * (h * h + 2 * M_ * Mw)) / K
    return M_, Mw, Mww


def block_means(N: int) -> list:
    """``(n, E[blocks], Var[blocks])`` for ``1 <= n <= N`` as exact rationals."""
    M, Mw, Mww = block_moment_series(N + 1)
    out = []
    for n in range(1, N + 1):
        m = M[n]
        er = Mw[n] / m
        err = Mww[n] / m
        out.append((n, er + 1, err + er - er * er))
    return out


def vertex_moments(N: int) -> list:
    """``(n, E[V], Var[V])`` for the vertex count of maps with ``n <= N`` edges.

    Exact integer recursion on root-edge deletion with ``x`` marking faces
    (vertices and faces are equidistributed by duality). Writing the face
    series as ``x P``::

        P = 1 + z u^2 P^2 + x z u (u P(u) - P(1)) / (u - 1)

    Only the ``(x-1)``-jet of order 2 is carried, which is all the first two
    moments need. Cost grows like ``N^4``; meant for ``N`` up to ~60.
    """
    import numpy as np

    def jmul(a, b):
        # a, b: lists of three coefficient arrays (jet in x - 1)
        out = [None, None, None]
        for i in range(3):
            for j in range(3 - i):
                c = np.convolve(a[i], b[j])
                out[i + j] = c if out[i + j] is None else out[i + j] + c
        return out

    def zeros(k):
        return [np.zeros(k, dtype=object) for _ in range(3)]

    one = [np.array([1], dtype=object), np.array([0], dtype=object), np.array([0], dtype=object)]
    P = [one]
    for n in range(1, N + 1):
        acc = zeros(2 * n + 1)
        for a in range(n):
            prod = jmul(P[a], P[n - 1 - a])
            for i in range(3):
                acc[i][2:2 + len(prod[i])] += prod[i]
        prev = P[n - 1]
        for i in range(3):
            # u * sum_k p_k (1 + u + ... + u^k), then times x = 1 + (x - 1)
            cs = np.cumsum(prev[i][::-1])[::-1]
            acc[i][1:1 + len(cs)] += cs
            if i < 2:
                acc[i + 1][1:1 + len(cs)] += cs
        P.append(acc)
    out = []
    for n in range(1, N + 1):
        e0, e1, e2 = (int(sum(P[n][i])) for i in range(3))
        m1 = mpq(e1, e0)
        out.append((n, 1 + m1, 2 * mpq(e2, e0) + m1 - m1 * m1))
    return out


# ---------------------------------------------------------------------------
# root degree and the root-cut probability
# ---------------------------------------------------------------------------

def _r_series(N: int) -> PowerSeries:
    """``r(u) = (3/4) M(1/12, u)`` with
    ``M(1/12,u) = (-3u^2 + 36u - 36 + 36 sqrt((1+u/2)(1-5u/6)^3)) / (6u^2(u-1))``."""
    P = N + 2
    u = Z(P)
    rad = (1 + u / 2) * (1 - mpq(5, 6) * u) ** 3
    num = -3 * u * u + 36 * u - 36 + 36 * rad.sqrt()
    den = 6 * u * u * (u - 1)
    return (mpq(3, 4) * (num / den)).truncate(N)


def degree_series(N: int) -> tuple[PowerSeries, PowerSeries, PowerSeries]:
    """Limiting root-edge degree ``d``, vertex degree ``s`` and the law ``q``.

    ``d = z/12 ((1+z/2)(1-5z/6)^3)^{-1/2}``, ``s_k = 4 d_k / k`` and ``q`` is
    defined by ``s(z) = q(z r(z))``.
    """
    z = Z(N)
    d = z / 12 / ((1 + z / 2) * (1 - mpq(5, 6) * z) ** 3).sqrt()
    s = PowerSeries([0] + [4 * d[k] / k for k in range(1, N + 1)], N)
    r = _r_series(N)
    inv = ps_revert(z * r)
    q = ps_compose(s, inv)
    return d, s, q


_BRANCHES = [(s1, s2) for s1 in (-1, 1) for s2 in (-1, 1)]


def q_closed_form(z, branch=(-1, -1)):
    """Closed form of ``q`` with real radicals.

    With ``R1 = sqrt(27-2z) (3-2z)^{3/2}`` and ``R2 = sqrt(27-2z) sqrt(3-2z)``::

        q = ( sqrt((20z^2 + 48z + s1 R1 + 123) / (z(4z+3) + 24))
              / (2 sqrt((6-4z) / (-14z + 5 s2 R2 + 51))) - 1 ) / 2

    The principal complex branches of the original radicals
    ``sqrt(2z-27)`` and ``sqrt(2z-3)`` correspond to ``s1 = s2 = -1``.
    """
    z = _mpf(z)
    s1, s2 = branch
    a = mpmath.sqrt(27 - 2 * z)
    b = mpmath.sqrt(3 - 2 * z)
    R1 = a * b**3
    R2 = a * b
    top = mpmath.sqrt((20 * z**2 + 48 * z + s1 * R1 + 123) / (z * (4 * z + 3) + 24))
    bot = 2 * mpmath.sqrt((6 - 4 * z) / (-14 * z + 5 * s2 * R2 + 51))
    return (top / bot - 1) / 2


def q_closed_form_principal(z):
    """The literal expression with principal complex square roots."""
    z = mpmath.mpc(_mpf(z))
    sq = mpmath.sqrt
    top = sq((20 * z**2 + 48 * z - sq(2 * z - 27) * sq(2 * z - 3) ** 3 + 123) / (z * (4 * z + 3) + 24))
    bot = 2 * sq((6 - 4 * z) / (-14 * z + 5 * sq(2 * z - 27) * sq(2 * z - 3) + 51))
    return (top / bot - 1) / 2


def select_q_branch(order: int = 12, probes=(mpq(1, 1000), mpq(1, 100), mpq(1, 20))):
    """The sign pair whose closed form agrees with the ``q`` series near 0."""
    _, _, q = degree_series(order)
    good = []
    for br in _BRANCHES:
        ok = True
        for x in probes:
            try:
                val = q_closed_form(x, br)
            except (ZeroDivisionError, ValueError):
                ok = False
                break
            if isinstance(val, mpmath.mpc) and abs(val.imag) > 1e-20:
                ok = False
                break
            ser = ps_eval(q, x, "float")
            if abs(float(mpmath.re(val)) - ser) > 1e-9:
                ok = False
                break
        if ok:
            good.append(br)
    if len(good) != 1:
        raise BranchError(f"expected one matching branch, got {good}")
    return good[0]


def prob_root_cut(series_order: int = 80) -> dict:
    """Limit probability ``p = 1 - q(3/4)`` that the root vertex is a cut vertex.

    Returns the closed-form value (branch fixed by series matching), the
    partial sum of the ``q`` series at 3/4 and the tail trend of that sum.
    """
    with mpmath.workdps(40):
        br = select_q_branch()
        closed = 1 - q_closed_form(mpmath.mpf(3) / 4, br)
        principal = 1 - q_closed_form_principal(mpmath.mpf(3) / 4)
        if abs(principal - closed) > mpmath.mpf(10) ** -30:
            raise BranchError("selected branch differs from the principal branch")
        _, _, q = degree_series(series_order)
        x = mpq(3, 4)
        partial = 1 - ps_eval(q, x)
        half = 1 - ps_eval(q.truncate(series_order // 2), x)
        target = (5 - mpmath.sqrt(17)) / 2
        return {
            "branch": br,
            "p_closed": float(closed),
            "p_series": float(partial),
            "series_order": series_order,
            "series_step": float(partial - half),
            "difference": float(abs(closed - _mpf(partial))),
            "target": float(target),
            "closed_error": float(abs(closed - target)),
        }


# ---------------------------------------------------------------------------
# linear CLT constants from a singularity function rho
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CltConstants:
    c: object
    sigma2: object
    rho_at_1: object

    def as_float(self) -> tuple[float, float]:
        return float(self.c), float(self.sigma2)


def clt_constants(rho: Callable, mode: str = "exact", h: float = 1e-4) -> CltConstants:
    """``c = -rho'(1)/rho(1)`` and ``sigma^2 = c + c^2 - rho''(1)/rho(1)``.

    ``mode="exact"`` evaluates ``rho(1 + t)`` on a truncated series (so
    ``rho`` must accept :class:`PowerSeries`, e.g. built with :func:`gsqrt`)
    and is exact for algebraic ``rho`` with rational jets. ``mode="numeric"``
    uses central differences with step ``h`` and one Richardson step, in
    mpmath arithmetic.
    """
    if mode == "exact":
        jet = rho(PowerSeries([1, 1], 2))
        if not isinstance(jet, PowerSeries):
            jet = PowerSeries.constant(jet, 2)
        r0, r1, r2 = jet[0], jet[1], 2 * jet[2]
        if r0 <= 0:
            raise ValueError("rho(1) must be positive")
    elif mode == "numeric":
        with mpmath.workdps(30):
            hh = mpmath.mpf(h)
            r0 = mpmath.mpf(rho(mpmath.mpf(1)))
            if r0 <= 0:
                raise ValueError("rho(1) must be positive")

            def d1(k):
                return (rho(1 + k) - rho(1 - k)) / (2 * k)

            def d2(k):
                return (rho(1 + k) - 2 * r0 + rho(1 - k)) / (k * k)

            r1 = (4 * d1(hh / 2) - d1(hh)) / 3
            r2 = (4 * d2(hh / 2) - d2(hh)) / 3
    else:
        raise ValueError(f"unknown mode {mode!r}")
    c = -r1 / r0
    sigma2 = c + c * c - r2 / r0
    return CltConstants(c, sigma2, r0)


def rho_blocks(w):
    """Radius of ``M(z, w)`` in ``z``: ``4 / (3 (w^2 + 6w + 9))``."""
    return 4 / (3 * (w * w + 6 * w + 9))


# ---------------------------------------------------------------------------
# asymptotic checks
# ---------------------------------------------------------------------------

def least_squares_slope(points) -> tuple[float, float]:
    """Slope and RMS residual of the least-squares line through ``(n, value)``."""
    import numpy as np

    xs = np.array([float(p[0]) for p in points])
    ys = np.array([float(p[1]) for p in points])
    A = np.vstack([xs, np.ones_like(xs)]).T
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    resid = ys - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid**2)))


def cut_vertex_means(N: int, Ea: PowerSeries | None = None) -> list:
    """``(n, E[X_n])`` with ``E[X_n] = [z^n]Ea / M_n`` (exact rationals)."""
    Ea = series_Ea(N) if Ea is None else Ea
    return [(n, Ea[n] / mn_closed(n)) for n in range(1, N + 1)]


def estimate_c_from_series(N: int = 200, which: str = "cut") -> dict:
    """Least-squares slope of the exact mean sequence over ``n in [N/2, N]``."""
    if N < 120:
        raise ValueError("N must be at least 120")
    if which == "cut":
        means = cut_vertex_means(N)
        target = (5 - math.sqrt(17)) / 4
    elif which == "blocks":
        means = [(n, m) for n, m, _ in block_means(N)]
        target = 0.5
    elif which == "vertices":
        means = [(n, mpq(n, 2) + 1) for n in range(1, N + 1)]
        target = 0.5
    else:
        raise ValueError(f"unknown sequence {which!r}")
    pts = [(n, m) for n, m in means if N // 2 <= n <= N]
    slope, resid = least_squares_slope(pts)
    return {"which": which, "slope": slope, "residual": resid, "target": target,
            "error": abs(slope - target), "range": [N // 2, N]}


def _richardson(seq: list, ns: list, k: int):
    """Eliminate ``1/n, ..., 1/n^k`` corrections from the last ``k+1`` terms."""
    a = seq[-(k + 1):]
    n = ns[-(k + 1):]
    n0 = n[0]
    total = mpmath.mpf(0)
    for j in range(k + 1):
        total += a[j] * mpmath.mpf(n0 + j) ** k * (-1) ** (k + j) / (math.factorial(j) * math.factorial(k - j))
    return total


def singular_amplitude(f: PowerSeries, rho, alpha, k: int = 4, dps: int = 60):
    """Amplitude ``C`` in ``f ~ C (1 - z/rho)^alpha`` from the coefficients.

    Uses ``[z^n](1-z/rho)^alpha ~ n^{-alpha-1} / Gamma(-alpha) rho^{-n}`` and
    Richardson extrapolation over the last ``k+1`` coefficients (equally
    spaced consecutive ``n``).
    """
    rho = rational(rho)
    with mpmath.workdps(dps):
        al = mpmath.mpf(alpha.numerator) / alpha.denominator if hasattr(alpha, "numerator") else mpmath.mpf(alpha)
        g = mpmath.gamma(-al)
        ns = list(range(f.order - k, f.order + 1))
        seq = []
        for n in ns:
            c = f[n] * rho**n
            cm = mpmath.mpf(int(c.numerator)) / int(c.denominator)
            seq.append(cm * mpmath.mpf(n) ** (al + 1) * g)
        return _richardson(seq, ns, k)


def singular_value(f: PowerSeries, rho, dps: int = 40, k: int = 5):
    """``f(rho)`` for a series whose terms decay like ``n^{-3/2}`` at ``rho``.

    Partial sums ``S_n`` behave like ``L + a n^{-1/2} + b n^{-3/2} + ...``;
    ``L`` is fitted by least squares in those powers over ``n in [N/2, N]``.
    """
    rho = rational(rho)
    with mpmath.workdps(dps):
        s = mpmath.mpf(0)
        pts = []
        x = mpq(1)
        for n in range(f.order + 1):
            t = f[n] * x
            s += mpmath.mpf(int(t.numerator)) / int(t.denominator)
            x *= rho
            if n >= f.order // 2:
                pts.append((n, s))
        # powers 0, 1/2, 3/2, 5/2, ...: integer powers of 1/n cancel from the tail
        rows = [[1] + [mpmath.mpf(n) ** (-(mpmath.mpf(2 * j + 1) / 2)) for j in range(k)] for n, _ in pts]
        A = mpmath.matrix(rows)
        b = mpmath.matrix([v for _, v in pts])
        sol = mpmath.lu_solve(A.T * A, A.T * b)
        return sol[0]


def singular_constant_check(N: int = 300) -> dict:
    """Leading singular constants recovered from exact coefficients.

    * ``B_z``: amplitude of ``-(1 - 27z/4)^{1/2}`` should be ``sqrt(3)``.
    * ``B_x``: value at ``z = 4/27`` should be ``2/27``.
    * ``Ea``: amplitude of ``-(1 - 12z)^{1/2}`` should be ``5 - sqrt(17)``.
    * calibration: ``(1-12z)^{3/2}`` has amplitude ``1``.
    """
    if N < 200:
        raise ValueError("N must be at least 200")
    Bx, Bz = series_Bx_Bz(N)
    Ea = series_Ea(N)
    z = Z(N)
    cal = (1 - 12 * z) * (1 - 12 * z).sqrt()
    res = {}

    def rec(name, got, target):
        got = float(got)
        res[name] = {"value": got, "target": target, "rel_error": abs(got - target) / abs(target)}

    rec("Bz_amplitude", -singular_amplitude(Bz, mpq(4, 27), mpq(1, 2)), math.sqrt(3))
    rec("Bx_value", singular_value(Bx, mpq(4, 27)), 2 / 27)
    rec("Bx_amplitude", -singular_amplitude(Bx, mpq(4, 27), mpq(1, 2)), 2 * math.sqrt(3) / 27)
    rec("Ea_amplitude", -singular_amplitude(Ea, mpq(1, 12), mpq(1, 2)), 5 - math.sqrt(17))
    rec("calibration", singular_amplitude(cal, mpq(1, 12), mpq(3, 2)), 1.0)
    res["order"] = N
    return res


# ---------------------------------------------------------------------------
# bundle
# ---------------------------------------------------------------------------

@dataclass
class GfBundle:
    order: int
    M: PowerSeries
    M_u: CatalyticSeries
    V: PowerSeries
    u1: PowerSeries
    B_u: CatalyticSeries
    Bx: PowerSeries
    Bz: PowerSeries
    Bbullet_w: CatalyticSeries
    Ea: PowerSeries
    M0: PowerSeries
    M_w: CatalyticSeries

    def check(self) -> None:
        """Raise :class:`ConsistencyError` if a defining identity fails."""
        N = self.order
        z = Z(N)
        if self.M_u.at(1) != self.M:
            raise ConsistencyError("M(z,u) at u=1 differs from M(z)")
        if self.u1 != 1 + z * self.u1**3:
            raise ConsistencyError("u1 != 1 + z u1^3")
        if self.B_u.substitute(self.u1) != self.V * self.V:
            raise ConsistencyError("B(z,1,u1) != V^2")


def build_bundle(N: int) -> GfBundle:
    """All series to order ``N`` (the bivariate ones are expensive; keep N small)."""
    V, u1 = series_V_u1(N)
    Bx, Bz = series_Bx_Bz(N)
    b = GfBundle(
        order=N,
        M=series_M(N),
        M_u=series_M_catalytic(N),
        V=V,
        u1=u1,
        B_u=series_B(N, V),
        Bx=Bx,
        Bz=Bz,
        Bbullet_w=series_Bbullet(N),
        Ea=series_Ea(N),
        M0=series_M0(N),
        M_w=series_blocks(N),
    )
    b.check()
    return b
