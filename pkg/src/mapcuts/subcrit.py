"""Subcritical map classes: outerplanar, bipartite outerplanar, series-parallel.

Two composition schemes appear:

* ``"map"``: ``M(z) = 1 + A(z M(z)^2)`` (blocks carry a map at every corner);
  the class is subcritical when ``z1 M(z1)^2 < z0``.
* ``"tree"``: ``M(z) = z / (1 - A(M(z)))`` (outerplanar maps counted by
  vertices); subcritical when ``M(z1) < z0``.

Here ``z0`` is the radius of the block series ``A`` and ``z1`` the radius of
``M``. In the tree scheme the maps are encoded by Galton-Watson trees whose
offspring weights are ``[w^k] 1/(1 - A(w))`` tilted by ``tau = M(z1)``; the
number of cut vertices of a map with ``n`` vertices is ``(n-1)`` minus the
number of leaves of its tree (up to the root indicator, ignored here).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath
import numpy as np
from gmpy2 import mpq

from . import _kernels as K
from .mapgf import _B_closed, _mpf, clt_constants
from .qseries import PowerSeries, Z, gsqrt, ps_newton_implicit

__all__ = [
    "SubcriticalClass",
    "OffspringLaw",
    "SamplingError",
    "REGISTRY",
    "get_class",
    "outerplanar_forms",
    "bipartite_forms",
    "check_subcritical",
    "rho_tree",
    "gw_offspring",
    "sample_gw_tree",
    "simulate_cut_counts",
    "leaf_stats",
]

DPS = 40


class SamplingError(RuntimeError):
    pass


@dataclass
class SubcriticalClass:
    name: str
    convention: str                       # "map" or "tree"
    z0: Callable[[], mpmath.mpf]
    A: Callable                           # pointwise block function
    dA: Callable                          # its derivative
    A_series: Callable[[int], PowerSeries] | None = None
    d2A: Callable | None = None
    notes: str = ""
    # algebraic equation F(A, x) = 0 for the block series: (A, x) -> (F, F_A, F_x)
    poly: Callable | None = None


# ---------------------------------------------------------------------------
# outerplanar
# ---------------------------------------------------------------------------

def _A_outer(x):
    # root with A(0) = 0 of 2A^2 - (1+x)A + x = 0
    return (1 + x - gsqrt(1 - 6 * x + x * x)) / 4


def _dA_outer(x):
    r = mpmath.sqrt(1 - 6 * x + x * x)
    return (1 - (x - 3) / r) / 4


def _d2A_outer(x):
    r2 = 1 - 6 * x + x * x
    # d/dx of -(x-3)/r = -(1/r - (x-3)^2 / r^3)
    return -(1 / mpmath.sqrt(r2) - (x - 3) ** 2 / r2 ** mpmath.mpf(1.5)) / 4


def _A_outer_series(N: int) -> PowerSeries:
    return _A_outer(Z(N))


def _MO_series(N: int) -> PowerSeries:
    z = Z(N)
    return z * (3 - (1 - 8 * z).sqrt()) / (2 * (1 + z))


def _rho_outer(y):
    """``(3 + y - 2 sqrt(2+2y)) / (y-1)^2 = 1 / (3 + y + 2 sqrt(2+2y))``."""
    y0 = y[0] if isinstance(y, PowerSeries) else y
    if abs(float(y0) - 1) >= 0.25:
        raise ValueError(f"y={float(y0)} outside the window |y - 1| < 1/4")
    return 1 / (3 + y + 2 * gsqrt(2 + 2 * y))


def _rho_outer_literal(y):
    y = _mpf(y)
    if abs(y - 1) >= 0.25:
        raise ValueError("y outside the window |y - 1| < 1/4")
    if y == 1:
        return mpmath.mpf(1) / 8
    return (3 + y - 2 * mpmath.sqrt(2 + 2 * y)) / (y - 1) ** 2


@dataclass
class OuterplanarForms:
    M_closed: Callable          # z -> M_O(z)
    M_series: Callable          # N -> PowerSeries
    A_series: Callable          # N -> PowerSeries
    M_bivariate: Callable       # (z, y) -> M_O(z, y)
    rho: Callable               # y -> rho(y), series-friendly
    rho_literal: Callable       # y -> rho(y) from the unsimplified quotient


def _MO_closed(z):
    z = _mpf(z)
    return z * (3 - mpmath.sqrt(1 - 8 * z)) / (2 * (1 + z))


def _M_tree_bivariate(cls: SubcriticalClass, z, y):
    """Solve ``M = z / (1 - A(z + y (M - z)))`` by fixed-point iteration."""
    z, y = _mpf(z), _mpf(y)
    M = z
    for _ in range(10_000):
        new = z / (1 - cls.A(z + y * (M - z)))
        if abs(new - M) < mpmath.mpf(10) ** (-mpmath.mp.dps + 5):
            return new
        M = new
    raise SamplingError("fixed point did not converge (z beyond the radius?)")


def outerplanar_forms() -> OuterplanarForms:
    cls = REGISTRY["outerplanar"]
    return OuterplanarForms(
        M_closed=_MO_closed,
        M_series=_MO_series,
        A_series=_A_outer_series,
        M_bivariate=lambda z, y: _M_tree_bivariate(cls, z, y),
        rho=_rho_outer,
        rho_literal=_rho_outer_literal,
    )


# ---------------------------------------------------------------------------
# bipartite outerplanar: A = z + A^3 / (1 - A^2), i.e. A - 2A^3 + zA^2 - z = 0
# ---------------------------------------------------------------------------

def _A_bip(x):
    x = _mpf(x)
    if x == 0:
        return mpmath.mpf(0)
    roots = mpmath.polyroots([-2, x, 1, -x], maxsteps=200, extraprec=2 * mpmath.mp.prec)
    real = sorted(mpmath.re(r) for r in roots if abs(mpmath.im(r)) < mpmath.mpf(10) ** (-mpmath.mp.dps // 2))
    pos = [r for r in real if r > 0]
    if x > 0 and not pos:
        raise ValueError(f"no positive branch at x={x}")
    if x > 0:
        return pos[0]
    # negative x: the branch through 0 is the real root closest to x
    return min(real, key=lambda r: abs(r - x))


def _dA_bip(x, A=None):
    A = _A_bip(x) if A is None else A
    return (1 - A * A) / (1 - 6 * A * A + 2 * x * A)


def _d2A_bip(x):
    A = _A_bip(x)
    a1 = _dA_bip(x, A)
    FA = 1 - 6 * A * A + 2 * x * A
    FAA = -12 * A + 2 * x
    FAx = 2 * A
    return -(FAA * a1 * a1 + 2 * FAx * a1) / FA


def _A_bip_series(N: int) -> PowerSeries:
    z = Z(N)
    return ps_newton_implicit(lambda a: a - 2 * a**3 + z * a * a - z, PowerSeries([0], N))


def _poly_bip(a, x):
    return a - 2 * a**3 + x * a * a - x, 1 - 6 * a * a + 2 * x * a, a * a - 1


def _poly_outer(a, x):
    return 2 * a * a - (1 + x) * a + x, 4 * a - 1 - x, 1 - a


def _z0_bip():
    A2 = (5 - mpmath.sqrt(17)) / 4
    A = mpmath.sqrt(A2)
    return (6 * A2 - 1) / (2 * A)


@dataclass
class BipartiteForms:
    A_series: Callable
    A_point: Callable
    z0: object
    z1: object
    M_value: object
    rho: Callable


@functools.lru_cache(maxsize=None)
def _branch_point(name: str, dps: int):
    with mpmath.workdps(dps):
        base = check_subcritical(REGISTRY[name])
    return _mpf(base["M1"]), _mpf(base["z1"])


def rho_tree(cls: SubcriticalClass, y, step=mpmath.mpf("1e-3")):
    """Radius in ``z`` of ``M(z,y) = z / (1 - A(z + y(M - z)))``.

    Solves ``M (1 - A(x)) = z`` and ``1 - A(x) - y M A'(x) = 0`` with
    ``x = z + y (M - z)``, continuing from ``y = 1`` in steps of ``step``.
    """
    y = _mpf(y)
    M, z = _branch_point(cls.name, mpmath.mp.dps)
    if cls.poly is None:
        def eqs(M, z, a, yy):
            x = z + yy * (M - z)
            return [M * (1 - a) - z, 1 - a - yy * M * cls.dA(x), a - cls.A(x)]
    else:
        # carrying A as an unknown keeps every residual a rational function
        def eqs(M, z, a, yy):
            x = z + yy * (M - z)
            F, FA, Fx = cls.poly(a, x)
            return [M * (1 - a) - z, (1 - a) * FA + yy * M * Fx, F]

    a = 1 - z / M
    steps = max(1, int(mpmath.ceil(abs(y - 1) / step)))
    for k in range(1, steps + 1):
        yy = 1 + (y - 1) * k / steps
        M, z, a = mpmath.findroot(lambda M, z, a: eqs(M, z, a, yy), (M, z, a))
    return z


def bipartite_forms() -> BipartiteForms:
    cls = REGISTRY["bipartite-outerplanar"]
    with mpmath.workdps(DPS):
        rep = check_subcritical(cls)
    return BipartiteForms(
        A_series=_A_bip_series,
        A_point=_A_bip,
        z0=rep["z0"],
        z1=rep["z1"],
        M_value=rep["M1"],
        rho=lambda y: rho_tree(cls, y),
    )


# ---------------------------------------------------------------------------
# series-parallel and general maps (map convention)
# ---------------------------------------------------------------------------

def _A_sp(t):
    return t + t / 2 * (1 - t - mpmath.sqrt(1 - 6 * t + t * t))


def _dA_sp(t):
    r = mpmath.sqrt(1 - 6 * t + t * t)
    return 1 + (1 - t - r) / 2 + t / 2 * (-1 - (t - 3) / r)


def _V_point(t):
    """Root of ``V (1-V)^2 = t`` on ``[0, 1/3]``."""
    t = _mpf(t)
    if t == 0:
        return mpmath.mpf(0)
    hi = mpmath.mpf(1) / 3
    if t >= mpmath.mpf(4) / 27:
        return hi
    lo = mpmath.mpf(0)
    # v(1-v)^2 increases on [0, 1/3]; bisection is robust at the double root
    for _ in range(int(mpmath.mp.prec) + 8):
        mid = (lo + hi) / 2
        if mid * (1 - mid) ** 2 < t:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def _A_general(t):
    V = _V_point(t)
    return _B_closed(V, 1) + 2 * t


def _dA_general(t):
    t = _mpf(t)
    V = _V_point(t)
    if t == 0:
        return mpmath.mpf(2)
    B = _B_closed(V, 1)
    Q = V * (1 - V) - B / V + t / (1 - V)
    return V * Q * (1 - Q) / t + 1 / (1 - V) - 1 + 2


REGISTRY: dict[str, SubcriticalClass] = {
    "outerplanar": SubcriticalClass(
        "outerplanar", "tree", lambda: 3 - 2 * mpmath.sqrt(2), _A_outer, _dA_outer,
        _A_outer_series, _d2A_outer,
        notes="2A^2 - (1+z)A + z = 0; M(1/8) = 1/6", poly=_poly_outer,
    ),
    "bipartite-outerplanar": SubcriticalClass(
        "bipartite-outerplanar", "tree", _z0_bip, _A_bip, _dA_bip, _A_bip_series, _d2A_bip,
        notes="A = z + A^3/(1 - A^2)", poly=_poly_bip,
    ),
    "series-parallel": SubcriticalClass(
        "series-parallel", "map", lambda: 3 - 2 * mpmath.sqrt(2), _A_sp, _dA_sp,
        notes="A = z + (z/2)(1 - z - sqrt(1 - 6z + z^2))",
    ),
    "general": SubcriticalClass(
        "general", "map", lambda: mpmath.mpf(4) / 27, _A_general, _dA_general,
        notes="A = B + 2z for all non-separable maps; critical",
    ),
}


def get_class(name: str) -> SubcriticalClass:
    try:
        return REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown class {name!r}; choose from {sorted(REGISTRY)}") from None


def check_subcritical(cls: SubcriticalClass | str, grid: int = 400) -> dict:
    """Locate ``z1`` and the subcriticality gap.

    Map scheme: along ``t = zM^2`` one has ``M = 1 + A(t)`` and
    ``z = t / (1 + A(t))^2``; ``z`` stops increasing where
    ``g(t) = 1 + A(t) - 2 t A'(t)`` vanishes. Tree scheme: ``z = M (1 - A(M))``
    stops increasing where ``g(M) = 1 - A(M) - M A'(M)`` vanishes. If ``g``
    stays positive up to ``z0`` the singularity of ``A`` is hit first and the
    class is critical (gap 0).
    """
    if isinstance(cls, str):
        cls = get_class(cls)
    with mpmath.workdps(DPS):
        z0 = cls.z0()
        if cls.convention == "map":
            def g(t):
                return 1 + cls.A(t) - 2 * t * cls.dA(t)
        elif cls.convention == "tree":
            def g(t):
                return 1 - cls.A(t) - t * cls.dA(t)
        else:
            raise ValueError(f"unknown convention {cls.convention!r}")
        # scan for the first sign change of g on (0, z0)
        root = None
        prev = mpmath.mpf(0)
        for k in range(1, grid + 1):
            t = z0 * k / grid
            if k == grid:
                t = z0 * (1 - mpmath.mpf(10) ** -20)
            if g(t) <= 0:
                root = mpmath.findroot(g, (prev, t), solver="anderson")
                break
            prev = t
        if root is None:
            t1 = z0
            critical = True
        else:
            t1 = root
            critical = False
        if cls.convention == "map":
            M1 = 1 + cls.A(t1)
            z1 = t1 / M1**2
            witness = z1 * M1**2
        else:
            M1 = t1
            z1 = M1 * (1 - cls.A(M1))
            witness = M1
        gap = z0 - witness
        return {
            "class": cls.name,
            "convention": cls.convention,
            "z0": z0,
            "z1": z1,
            "M1": M1,
            "witness": witness,
            "gap": gap,
            "subcritical": (not critical) and gap > 0,
        }


# ---------------------------------------------------------------------------
# Galton-Watson offspring laws and conditioned trees
# ---------------------------------------------------------------------------

@dataclass
class OffspringLaw:
    name: str
    probs: np.ndarray               # p_0..p_K, renormalised after truncation
    tau: object
    p0: object
    mean: object
    variance: object
    tail: float                     # mass beyond K before renormalising
    exact: dict = field(default_factory=dict)

    @property
    def K(self) -> int:
        return len(self.probs) - 1

    def leaf_constant(self) -> float:
        """``gamma^2 = p0 - p0^2 (1 + 1/Var)``: variance per vertex of the leaf count."""
        p0, v = self.p0, self.variance
        return p0 - p0 * p0 * (1 + 1 / v)


def _phi_coeffs(cls: SubcriticalClass, K: int) -> PowerSeries:
    A = cls.A_series(K)
    return 1 / (1 - A)


def gw_offspring(cls: SubcriticalClass | str, tail_tol: float = 1e-12, mean_tol: float = 1e-10) -> OffspringLaw:
    """Offspring law ``p_k = [w^k] phi(w) tau^k / phi(tau)``, ``phi = 1/(1 - A)``."""
    if isinstance(cls, str):
        cls = get_class(cls)
    if cls.convention != "tree" or cls.A_series is None:
        raise ValueError(f"class {cls.name} has no tree encoding")
    rep = check_subcritical(cls)
    with mpmath.workdps(DPS):
        tau = rep["M1"]
        exact = {}
        if cls.name == "outerplanar":
            tau = mpq(1, 6)
            # exact jets of phi at tau
            jet = 1 / (1 - _A_outer(PowerSeries([tau, 1], 2)))
            phi, d1, d2 = jet[0], jet[1], 2 * jet[2]
            mean = tau * d1 / phi
            fact2 = tau * tau * d2 / phi
            var = fact2 + mean - mean * mean
            p0 = 1 / phi
            exact = {"tau": tau, "phi_tau": phi, "mean": mean, "variance": var, "p0": p0}
            tau_mp = _mpf(tau)
        else:
            tau_mp = tau
            a = cls.A(tau_mp)
            a1 = cls.dA(tau_mp)
            a2 = cls.d2A(tau_mp)
            phi = 1 / (1 - a)
            d1 = a1 * phi**2
            d2 = a2 * phi**2 + 2 * a1**2 * phi**3
            mean = tau_mp * d1 / phi
            var = tau_mp**2 * d2 / phi + mean - mean**2
            p0 = 1 / phi
        if abs(float(mean) - 1) > mean_tol:
            raise ValueError(f"tilted law has mean {float(mean)}, not 1")
        ratio = float(tau_mp / cls.z0())
        K = max(64, int(math.log(tail_tol * 1e-2) / math.log(ratio)) + 64)
        while True:
            phis = _phi_coeffs(cls, K)
            phi_tau = _mpf(phi)
            probs = []
            x = mpmath.mpf(1)
            for k in range(K + 1):
                probs.append(_mpf(phis[k]) * x / phi_tau)
                x *= tau_mp
            tail = 1 - mpmath.fsum(probs)
            if tail < tail_tol:
                break
            K *= 2
        arr = np.array([float(p) for p in probs])
        arr /= arr.sum()
    return OffspringLaw(cls.name, arr, tau, p0, mean, var, float(tail), exact)


def sample_gw_tree(n: int, law: OffspringLaw, rng, batch: int = 1024, max_tries: int = 10**8) -> np.ndarray:
    """Offspring counts in preorder of a GW tree conditioned on ``n`` vertices.

    The counts of each degree are drawn jointly (multinomial) until they total
    ``n - 1`` children; the resulting degree sequence is shuffled and rotated
    into a valid preorder by the cycle lemma.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    g = rng.gen if hasattr(rng, "gen") else rng
    counts = _conditioned_counts(n, law, g, 1, batch, max_tries)[0]
    seq = np.repeat(np.arange(len(counts), dtype=np.int64), counts)
    g.shuffle(seq)
    start = K.cycle_lemma_start(seq - 1)
    return np.roll(seq, -start)


def _conditioned_counts(n, law, g, samples, batch, max_tries):
    ks = np.arange(law.K + 1, dtype=np.int64)
    out = []
    tries = 0
    while len(out) < samples:
        X = g.multinomial(n, law.probs, size=batch)
        tries += batch
        ok = np.flatnonzero(X @ ks == n - 1)
        out.extend(X[i].copy() for i in ok[: samples - len(out)])
        if tries > max_tries and len(out) < samples:
            raise SamplingError(f"only {len(out)} acceptances in {tries} tries")
    return out


def simulate_cut_counts(n: int, law: OffspringLaw, samples: int, rng, batch: int = 2048) -> np.ndarray:
    """Cut-vertex counts ``(n-1) - leaves`` of ``samples`` conditioned trees.

    The leaf count only depends on the conditioned degree counts, which is
    what the shuffle-and-rotate step of :func:`sample_gw_tree` preserves, so
    the trees themselves are not built here.
    """
    g = rng.gen if hasattr(rng, "gen") else rng
    counts = _conditioned_counts(n, law, g, samples, batch, 10**9)
    # a single vertex is a leaf but has nothing to cut
    return np.array([max(0, (n - 1) - int(c[0])) for c in counts], dtype=np.int64)


def leaf_stats(n: int, cuts: np.ndarray) -> dict:
    """Mean, variance and standardised moments of cut counts at size ``n``."""
    cuts = np.asarray(cuts, dtype=np.int64)
    m = len(cuts)
    s1 = int(cuts.sum())
    s2 = int((cuts * cuts).sum())
    mean = s1 / m
    var = (s2 - s1 * s1 / m) / (m - 1) if m > 1 else 0.0
    x = cuts - mean
    sd = math.sqrt(var) if var > 0 else 0.0
    skew = float(np.mean(x**3) / sd**3) if sd else 0.0
    kurt = float(np.mean(x**4) / sd**4 - 3) if sd else 0.0
    return {
        "n": n,
        "samples": m,
        "mean": mean,
        "variance": var,
        "mean_fraction": mean / n,
        "se_fraction": math.sqrt(var / m) / n if m > 1 else float("nan"),
        "variance_per_n": var / n,
        "skewness": skew,
        "excess_kurtosis": kurt,
    }


def clt_for_class(name: str):
    """``(c, sigma^2)`` of the cut-vertex count for a tree-scheme class."""
    cls = get_class(name)
    if name == "outerplanar":
        return clt_constants(_rho_outer)
    return clt_constants(lambda y: rho_tree(cls, y), mode="numeric")
