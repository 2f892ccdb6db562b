"""Truncated power series with exact rational coefficients.

Two containers live here:

* :class:`PowerSeries` -- a dense univariate series ``sum c_k z^k`` known for
  ``k = 0..order``.
* :class:`CatalyticSeries` -- a series in ``z`` whose coefficients are
  polynomials in an auxiliary ("catalytic") variable.

Coefficients are ``gmpy2.mpq`` values. Operations that cancel a factor of the
divisor (division by a series of positive valuation, division by ``z``) lose
precision at the top; the result then carries a smaller ``order`` rather than
made-up coefficients.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import gmpy2
from gmpy2 import mpq, mpz

__all__ = [
    "SeriesError",
    "OrderMismatchError",
    "SingularDivisionError",
    "BranchError",
    "CompositionError",
    "NotInvertibleError",
    "ConvergenceError",
    "PowerSeries",
    "CatalyticSeries",
    "Z",
    "rational",
    "ps_mul",
    "ps_div",
    "ps_sqrt",
    "ps_compose",
    "ps_revert",
    "ps_newton_implicit",
    "ps_eval",
    "gsqrt",
]

ZERO = mpq(0)
ONE = mpq(1)


class SeriesError(ArithmeticError):
    pass


class OrderMismatchError(SeriesError):
    pass


class SingularDivisionError(SeriesError):
    pass


class BranchError(SeriesError):
    pass


class CompositionError(SeriesError):
    pass


class NotInvertibleError(SeriesError):
    pass


class ConvergenceError(SeriesError):
    pass


def rational(x) -> mpq:
    """Coerce ints, Fractions, mpq, floats (exactly) and ``"p/q"`` strings."""
    if isinstance(x, type(ONE)):
        return x
    if isinstance(x, (int, type(mpz(0)))):
        return mpq(x)
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"cannot represent {x!r} exactly")
        return mpq(*x.as_integer_ratio())
    if isinstance(x, str):
        num, _, den = x.strip().partition("/")
        return mpq(int(num), int(den) if den else 1)
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def _rational_sqrt(c: mpq) -> mpq:
    if c < 0:
        raise BranchError(f"constant term {c} is negative")
    num, den = gmpy2.numer(c), gmpy2.denom(c)
    if not (gmpy2.is_square(num) and gmpy2.is_square(den)):
        raise BranchError(f"constant term {c} is not the square of a rational")
    return mpq(gmpy2.isqrt(num), gmpy2.isqrt(den))


# ---------------------------------------------------------------------------
# list-level kernels (lists of mpq, explicit length)
# ---------------------------------------------------------------------------

def _mul(a: Sequence, b: Sequence, n: int) -> list:
    out = []
    la, lb = len(a), len(b)
    for k in range(n):
        lo = max(0, k - lb + 1)
        hi = min(k, la - 1)
        s = ZERO
        for i in range(lo, hi + 1):
            ai = a[i]
            if ai:
                s += ai * b[k - i]
        out.append(s)
    return out


def _inv(b: Sequence, n: int) -> list:
    b0 = b[0]
    if not b0:
        raise SingularDivisionError("series has zero constant term")
    inv0 = 1 / b0
    out = [inv0]
    lb = len(b)
    for k in range(1, n):
        s = ZERO
        for i in range(1, min(k, lb - 1) + 1):
            bi = b[i]
            if bi:
                s += bi * out[k - i]
        out.append(-s * inv0)
    return out


def _div(a: Sequence, b: Sequence, n: int) -> list:
    b0 = b[0]
    if not b0:
        raise SingularDivisionError("divisor has zero constant term")
    inv0 = 1 / b0
    out = []
    lb = len(b)
    for k in range(n):
        s = a[k] if k < len(a) else ZERO
        for i in range(1, min(k, lb - 1) + 1):
            bi = b[i]
            if bi:
                s -= bi * out[k - i]
        out.append(s * inv0)
    return out


def _sqrt(a: Sequence, n: int) -> list:
    s0 = _rational_sqrt(a[0])
    if not s0:
        raise BranchError("zero constant term")
    half = 1 / (2 * s0)
    out = [s0]
    for k in range(1, n):
        s = a[k] if k < len(a) else ZERO
        for i in range(1, k):
            s -= out[i] * out[k - i]
        out.append(s * half)
    return out


def _valuation(c: Sequence) -> int | None:
    for i, x in enumerate(c):
        if x:
            return i
    return None


# ---------------------------------------------------------------------------
# PowerSeries
# ---------------------------------------------------------------------------

class PowerSeries:
    """Dense truncated series ``c_0 + c_1 z + ... + c_N z^N``.

    Arithmetic between two series requires equal orders; mixing with plain
    numbers is always allowed. Use :meth:`truncate` or :func:`align` to bring
    operands to a common order.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs: Iterable, order: int | None = None):
        c = [rational(x) for x in coeffs]
        if order is not None:
            if order < 0:
                raise ValueError("order must be nonnegative")
            if len(c) > order + 1:
                c = c[: order + 1]
            else:
                c.extend([ZERO] * (order + 1 - len(c)))
        if not c:
            raise ValueError("a series needs at least one coefficient")
        self._c = tuple(c)

    @classmethod
    def _raw(cls, coeffs: list) -> PowerSeries:
        obj = cls.__new__(cls)
        obj._c = tuple(coeffs)
        return obj

    @classmethod
    def constant(cls, value, order: int) -> PowerSeries:
        return cls([value], order)

    @classmethod
    def monomial(cls, k: int, order: int, coeff=1) -> PowerSeries:
        c = [ZERO] * (order + 1)
        if k <= order:
            c[k] = rational(coeff)
        return cls._raw(c)

    @classmethod
    def geometric(cls, order: int) -> PowerSeries:
        return cls._raw([ONE] * (order + 1))

    # -- basic protocol -----------------------------------------------------
    @property
    def coeffs(self) -> tuple:
        return self._c

    @property
    def order(self) -> int:
        return len(self._c) - 1

    def __len__(self) -> int:
        return len(self._c)

    def __getitem__(self, k):
        return self._c[k]

    def __iter__(self):
        return iter(self._c)

    def __eq__(self, other) -> bool:
        if isinstance(other, PowerSeries):
            return self._c == other._c
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._c)

    def __repr__(self) -> str:
        shown = " + ".join(f"{c}*z^{k}" for k, c in enumerate(self._c[:8]) if c)
        return f"PowerSeries({shown or '0'} + O(z^{self.order + 1}))"

    def valuation(self) -> int | None:
        """Index of the first nonzero coefficient, ``None`` for the zero series."""
        return _valuation(self._c)

    def is_zero(self) -> bool:
        return self.valuation() is None

    def truncate(self, order: int) -> PowerSeries:
        if order > self.order:
            raise OrderMismatchError(f"cannot extend order {self.order} to {order}")
        return PowerSeries._raw(list(self._c[: order + 1]))

    def shift(self, k: int) -> PowerSeries:
        """Multiply by ``z^k``; negative ``k`` divides and loses ``|k|`` orders."""
        if k >= 0:
            return PowerSeries._raw([ZERO] * k + list(self._c[: len(self._c) - k]))
        k = -k
        if any(self._c[:k]):
            raise SingularDivisionError(f"series is not divisible by z^{k}")
        if k > self.order:
            raise OrderMismatchError("no coefficients left after the shift")
        return PowerSeries._raw(list(self._c[k:]))

    def derivative(self) -> PowerSeries:
        c = self._c
        if len(c) == 1:
            return PowerSeries._raw([ZERO])
        return PowerSeries._raw([k * c[k] for k in range(1, len(c))])

    def integral(self) -> PowerSeries:
        """Antiderivative with zero constant term (order grows by one)."""
        return PowerSeries._raw([ZERO] + [c / (k + 1) for k, c in enumerate(self._c)])

    # -- arithmetic ---------------------------------------------------------
    def _check(self, other: PowerSeries) -> None:
        if len(other._c) != len(self._c):
            raise OrderMismatchError(f"orders differ: {self.order} vs {other.order}")

    def __neg__(self) -> PowerSeries:
        return PowerSeries._raw([-x for x in self._c])

    def __add__(self, other):
        if isinstance(other, PowerSeries):
            self._check(other)
            return PowerSeries._raw([x + y for x, y in zip(self._c, other._c)])
        if isinstance(other, CatalyticSeries):
            return NotImplemented
        c = list(self._c)
        c[0] += rational(other)
        return PowerSeries._raw(c)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, PowerSeries):
            self._check(other)
            return PowerSeries._raw([x - y for x, y in zip(self._c, other._c)])
        if isinstance(other, CatalyticSeries):
            return NotImplemented
        c = list(self._c)
        c[0] -= rational(other)
        return PowerSeries._raw(c)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, PowerSeries):
            self._check(other)
            return PowerSeries._raw(_mul(self._c, other._c, len(self._c)))
        if isinstance(other, CatalyticSeries):
            return NotImplemented
        k = rational(other)
        return PowerSeries._raw([k * x for x in self._c])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, PowerSeries):
            return ps_div(self, other)
        if isinstance(other, CatalyticSeries):
            return NotImplemented
        k = rational(other)
        if not k:
            raise ZeroDivisionError("division of a series by zero")
        return PowerSeries._raw([x / k for x in self._c])

    def __rtruediv__(self, other):
        return ps_div(PowerSeries.constant(other, self.order), self)

    def __pow__(self, e: int) -> PowerSeries:
        if not isinstance(e, int):
            raise TypeError("only integer powers are supported")
        if e < 0:
            return 1 / (self ** (-e))
        result = PowerSeries.constant(1, self.order)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def sqrt(self) -> PowerSeries:
        return ps_sqrt(self)

    def compose(self, inner: PowerSeries) -> PowerSeries:
        return ps_compose(self, inner)

    def __call__(self, inner: PowerSeries) -> PowerSeries:
        return ps_compose(self, inner)

    def revert(self) -> PowerSeries:
        return ps_revert(self)

    def eval(self, point, mode: str = "exact"):
        return ps_eval(self, point, mode)

    # -- serialization ------------------------------------------------------
    def to_json(self) -> str:
        return json.dumps({"order": self.order, "coeffs": [str(c) for c in self._c]})

    @classmethod
    def from_json(cls, text: str) -> PowerSeries:
        data = json.loads(text)
        return cls([rational(s) for s in data["coeffs"]], data["order"])


def Z(order: int) -> PowerSeries:
    """The series ``z`` truncated at ``order``."""
    return PowerSeries.monomial(1, order)


def align(*series: PowerSeries) -> tuple:
    """Truncate all arguments to their smallest common order."""
    n = min(s.order for s in series)
    return tuple(s if s.order == n else s.truncate(n) for s in series)


# ---------------------------------------------------------------------------
# free-function forms of the operations
# ---------------------------------------------------------------------------

def ps_mul(a: PowerSeries, b: PowerSeries) -> PowerSeries:
    return a * b


def ps_div(a: PowerSeries, b: PowerSeries) -> PowerSeries:
    """Quotient ``a / b``.

    If ``b`` has valuation ``v > 0`` the factor ``z^v`` must cancel against
    ``a``; the quotient is then known only up to order ``N - v``.
    """
    if a.order != b.order:
        raise OrderMismatchError(f"orders differ: {a.order} vs {b.order}")
    vb = b.valuation()
    if vb is None:
        raise SingularDivisionError("division by the zero series")
    if vb == 0:
        return PowerSeries._raw(_div(a._c, b._c, len(a._c)))
    va = a.valuation()
    if va is not None and va < vb:
        raise SingularDivisionError(
            f"numerator valuation {va} is below divisor valuation {vb}"
        )
    if vb > a.order:
        raise SingularDivisionError("divisor vanishes to full precision")
    n = a.order - vb + 1
    return PowerSeries._raw(_div(a._c[vb:], b._c[vb:], n))


def ps_sqrt(a: PowerSeries) -> PowerSeries:
    """Square root with positive leading coefficient.

    An even valuation ``2m`` is pulled out as ``z^m``; that costs ``m``
    orders of precision.
    """
    v = a.valuation()
    if v is None:
        return a
    if v == 0:
        return PowerSeries._raw(_sqrt(a._c, len(a._c)))
    if v % 2:
        raise BranchError(f"odd valuation {v} has no series square root")
    m = v // 2
    inner = _sqrt(a._c[v:], len(a._c) - v)
    return PowerSeries._raw([ZERO] * m + inner)


def ps_compose(outer: PowerSeries, inner: PowerSeries) -> PowerSeries:
    """Taylor composition ``outer(inner(z))`` for ``inner(0) == 0``."""
    if inner[0]:
        raise CompositionError("inner series has a nonzero constant term")
    if outer.order != inner.order:
        raise OrderMismatchError(f"orders differ: {outer.order} vs {inner.order}")
    n = len(outer._c)
    g = inner._c
    # Horner; the partial result at step k is later multiplied by inner^k,
    # so only its first n - k coefficients matter.
    acc = [outer._c[n - 1]]
    for k in range(n - 2, -1, -1):
        keep = n - k
        acc = _mul(acc, g, keep)
        acc[0] += outer._c[k]
    acc.extend([ZERO] * (n - len(acc)))
    return PowerSeries._raw(acc)


def ps_revert(f: PowerSeries) -> PowerSeries:
    """Compositional inverse ``g`` with ``f(g(z)) = z``, by Newton doubling."""
    if f[0]:
        raise NotInvertibleError("series has a nonzero constant term")
    if f.order < 1 or not f[1]:
        raise NotInvertibleError("series has zero linear coefficient")
    N = f.order
    df = f.derivative()
    g = [ZERO, 1 / f[1]]
    prec = 2
    while prec <= N:
        m = min(2 * prec, N + 1)
        gg = PowerSeries._raw(g + [ZERO] * (m - len(g)))
        fg = ps_compose(f.truncate(m - 1), gg)
        r = list(fg._c)
        r[1] -= 1
        # r vanishes below z^prec, so the divisor is only needed to m - prec terms
        need = m - prec
        dfg = ps_compose(df.truncate(need - 1), gg.truncate(need - 1)) if need > 1 else \
            PowerSeries._raw([df[0]])
        corr = _div(r[prec:], dfg._c, need)
        g = list(gg._c)
        for i, c in enumerate(corr):
            g[prec + i] -= c
        prec = m
    g.extend([ZERO] * (N + 1 - len(g)))
    return PowerSeries._raw(g[: N + 1])


def ps_newton_implicit(
    residual: Callable[[PowerSeries], PowerSeries],
    seed: PowerSeries,
    max_iter: int = 64,
) -> PowerSeries:
    """Solve ``residual(f) == 0`` to the order of ``seed``.

    Each step uses the exact difference quotient
    ``(R(f + z^v) - R(f)) / z^v`` as the derivative, where ``v`` is the
    current residual valuation; it agrees with ``R'(f)`` to ``O(z^v)``, which
    keeps the convergence quadratic.
    """
    f = seed
    N = f.order
    r = residual(f)
    v = r.valuation()
    if v is not None and v == 0:
        raise ConvergenceError("seed is not a solution to order 0")
    for _ in range(max_iter):
        if v is None or v > N:
            return f
        bump = PowerSeries.monomial(v, N)
        d = (residual(f + bump) - r).shift(-v)
        if not d[0]:
            raise ConvergenceError("residual is not contractive (zero derivative)")
        q = ps_div(r.shift(-v), d)
        f = f - PowerSeries._raw([ZERO] * v + list(q.coeffs))
        r = residual(f)
        nv = r.valuation()
        if nv is not None and nv <= v:
            raise ConvergenceError(f"correct order stagnated at {v}")
        v = nv
    raise ConvergenceError("iteration limit reached")


def ps_eval(f: PowerSeries, point, mode: str = "exact"):
    """Partial sum of the truncated series at ``point``."""
    x = rational(point)
    s = ZERO
    for c in reversed(f._c):
        s = s * x + c
    if mode == "exact":
        return s
    if mode == "float":
        return float(s)
    raise ValueError(f"unknown mode {mode!r}")


def gsqrt(x):
    """Square root that dispatches on series, rationals and floats."""
    if isinstance(x, PowerSeries):
        return ps_sqrt(x)
    if isinstance(x, type(ONE)):
        return _rational_sqrt(x)
    import mpmath

    if isinstance(x, (mpmath.mpf, mpmath.mpc)):
        return mpmath.sqrt(x)
    return math.sqrt(x)


# ---------------------------------------------------------------------------
# catalytic (bivariate) series
# ---------------------------------------------------------------------------

def _padd(p: list, q: list) -> list:
    if len(p) < len(q):
        p, q = q, p
    out = list(p)
    for i, x in enumerate(q):
        out[i] += x
    return out


def _psub(p: list, q: list) -> list:
    out = list(p) + [ZERO] * max(0, len(q) - len(p))
    for i, x in enumerate(q):
        out[i] -= x
    return out


def _pscale(p: list, k) -> list:
    return [k * x for x in p]


def _ptrim(p: list) -> list:
    while len(p) > 1 and not p[-1]:
        p.pop()
    return p


def _pmul(p: list, q: list) -> list:
    if not p or not q:
        return [ZERO]
    out = [ZERO] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return out


def _peval(p: list, x) -> mpq:
    s = ZERO
    for c in reversed(p):
        s = s * x + c
    return s


def _pdiv_linear(p: list, root) -> list:
    """Exact quotient of ``p(u)`` by ``(u - root)``; raises if not exact."""
    if len(p) == 1:
        if p[0]:
            raise SingularDivisionError("constant polynomial is not divisible")
        return [ZERO]
    n = len(p) - 1
    q = [ZERO] * n
    carry = ZERO
    for k in range(n, 0, -1):
        carry = p[k] + carry * root
        q[k - 1] = carry
    rem = p[0] + carry * root
    if rem:
        raise SingularDivisionError(f"polynomial does not vanish at {root} (remainder {rem})")
    return q


class CatalyticSeries:
    """Series in ``z`` with polynomial coefficients in a catalytic variable.

    ``coeffs[n]`` is the list of coefficients of the polynomial multiplying
    ``z^n`` (index = power of the catalytic variable).
    """

    __slots__ = ("_c", "name")

    def __init__(self, coeffs: Iterable[Iterable], order: int | None = None, name: str = "u"):
        c = [_ptrim([rational(x) for x in p] or [ZERO]) for p in coeffs]
        if order is not None:
            c = c[: order + 1] + [[ZERO] for _ in range(order + 1 - len(c))]
        if not c:
            raise ValueError("a series needs at least one coefficient")
        self._c = c
        self.name = name

    @classmethod
    def _raw(cls, coeffs: list, name: str) -> CatalyticSeries:
        obj = cls.__new__(cls)
        obj._c = [_ptrim(p) for p in coeffs]
        obj.name = name
        return obj

    @classmethod
    def from_series(cls, s: PowerSeries, name: str = "u") -> CatalyticSeries:
        """Lift a univariate series (no dependence on the catalytic variable)."""
        return cls._raw([[c] for c in s.coeffs], name)

    @classmethod
    def variable(cls, order: int, name: str = "u") -> CatalyticSeries:
        return cls._raw([[ZERO, ONE]] + [[ZERO] for _ in range(order)], name)

    @property
    def coeffs(self) -> list:
        return self._c

    @property
    def order(self) -> int:
        return len(self._c) - 1

    def __getitem__(self, n: int) -> list:
        return self._c[n]

    def degree(self, n: int) -> int:
        p = self._c[n]
        return 0 if len(p) == 1 and not p[0] else len(p) - 1

    def check_degree(self, bound: Callable[[int], int]) -> None:
        for n in range(len(self._c)):
            if self.degree(n) > bound(n):
                raise SeriesError(
                    f"degree {self.degree(n)} at z^{n} exceeds bound {bound(n)}"
                )

    def __eq__(self, other) -> bool:
        if isinstance(other, CatalyticSeries):
            return self._c == other._c
        return NotImplemented

    def __repr__(self) -> str:
        return f"CatalyticSeries(order={self.order}, var={self.name})"

    def truncate(self, order: int) -> CatalyticSeries:
        if order > self.order:
            raise OrderMismatchError(f"cannot extend order {self.order} to {order}")
        return CatalyticSeries._raw([list(p) for p in self._c[: order + 1]], self.name)

    def _coerce(self, other) -> CatalyticSeries:
        if isinstance(other, CatalyticSeries):
            if other.order != self.order:
                raise OrderMismatchError(f"orders differ: {self.order} vs {other.order}")
            return other
        if isinstance(other, PowerSeries):
            if other.order != self.order:
                raise OrderMismatchError(f"orders differ: {self.order} vs {other.order}")
            return CatalyticSeries.from_series(other, self.name)
        k = rational(other)
        return CatalyticSeries._raw([[k]] + [[ZERO] for _ in range(self.order)], self.name)

    def __neg__(self) -> CatalyticSeries:
        return CatalyticSeries._raw([[-x for x in p] for p in self._c], self.name)

    def __add__(self, other) -> CatalyticSeries:
        o = self._coerce(other)
        return CatalyticSeries._raw([_padd(p, q) for p, q in zip(self._c, o._c)], self.name)

    __radd__ = __add__

    def __sub__(self, other) -> CatalyticSeries:
        o = self._coerce(other)
        return CatalyticSeries._raw([_psub(p, q) for p, q in zip(self._c, o._c)], self.name)

    def __rsub__(self, other) -> CatalyticSeries:
        return (-self) + other

    def __mul__(self, other) -> CatalyticSeries:
        if not isinstance(other, (CatalyticSeries, PowerSeries)):
            k = rational(other)
            return CatalyticSeries._raw([_pscale(p, k) for p in self._c], self.name)
        o = self._coerce(other)
        n = len(self._c)
        out = []
        for k in range(n):
            acc = [ZERO]
            for i in range(k + 1):
                p = self._c[i]
                q = o._c[k - i]
                if (len(p) > 1 or p[0]) and (len(q) > 1 or q[0]):
                    acc = _padd(acc, _pmul(p, q))
            out.append(acc)
        return CatalyticSeries._raw(out, self.name)

    __rmul__ = __mul__

    def __truediv__(self, other) -> CatalyticSeries:
        if isinstance(other, (CatalyticSeries, PowerSeries)):
            return self * _cat_inverse(self._coerce(other))
        k = rational(other)
        return CatalyticSeries._raw([[x / k for x in p] for p in self._c], self.name)

    def __rtruediv__(self, other) -> CatalyticSeries:
        return self._coerce(other) * _cat_inverse(self)

    def __pow__(self, e: int) -> CatalyticSeries:
        if e < 0:
            raise ValueError("negative powers: use division")
        result = self._coerce(1)
        for _ in range(e):
            result = result * self
        return result

    def times_var(self, k: int = 1) -> CatalyticSeries:
        """Multiply by the catalytic variable to the ``k``-th power."""
        return CatalyticSeries._raw([[ZERO] * k + list(p) for p in self._c], self.name)

    def shift_z(self, k: int = 1) -> CatalyticSeries:
        """Multiply by ``z^k`` (keeps the order)."""
        empty = [[ZERO] for _ in range(k)]
        return CatalyticSeries._raw(empty + [list(p) for p in self._c[: len(self._c) - k]], self.name)

    def at(self, value) -> PowerSeries:
        """Set the catalytic variable to a rational number."""
        x = rational(value)
        return PowerSeries._raw([_peval(p, x) for p in self._c])

    def substitute(self, w: PowerSeries) -> PowerSeries:
        """``sum_n z^n p_n(w(z))`` for a series ``w`` of the same order."""
        if w.order != self.order:
            raise OrderMismatchError(f"orders differ: {self.order} vs {w.order}")
        N = self.order
        maxdeg = max(len(p) for p in self._c)
        powers = [PowerSeries.constant(1, N)]
        for _ in range(1, maxdeg):
            powers.append(powers[-1] * w)
        acc = [ZERO] * (N + 1)
        for n, p in enumerate(self._c):
            for j, c in enumerate(p):
                if c:
                    pw = powers[j]._c
                    for m in range(N + 1 - n):
                        acc[n + m] += c * pw[m]
        return PowerSeries._raw(acc)

    def var_derivative(self) -> CatalyticSeries:
        return CatalyticSeries._raw(
            [[k * p[k] for k in range(1, len(p))] or [ZERO] for p in self._c], self.name
        )

    def div_linear(self, root) -> CatalyticSeries:
        """Exact division by ``(var - root)``, ``root`` a rational or a series.

        For a series root ``r(z)`` with ``r(0) = r0`` the quotient ``Q`` is
        built order by order from ``(var - r0) Q_n = P_n + sum_k r_k Q_{n-k}``;
        every step must divide exactly.
        """
        if not isinstance(root, PowerSeries):
            r = rational(root)
            return CatalyticSeries._raw([_pdiv_linear(p, r) for p in self._c], self.name)
        if root.order != self.order:
            raise OrderMismatchError(f"orders differ: {self.order} vs {root.order}")
        r = root.coeffs
        out = []
        for n, p in enumerate(self._c):
            acc = list(p)
            for k in range(1, n + 1):
                if r[k]:
                    acc = _padd(acc, _pscale(out[n - k], r[k]))
            try:
                out.append(_pdiv_linear(_ptrim(acc), r[0]))
            except SingularDivisionError as exc:
                raise SingularDivisionError(f"kernel cancellation fails at z^{n}: {exc}") from None
        return CatalyticSeries._raw(out, self.name)

    def sqrt(self) -> CatalyticSeries:
        """Square root when the ``z^0`` coefficient is a rational square."""
        p0 = _ptrim(list(self._c[0]))
        if len(p0) != 1:
            raise BranchError("z^0 coefficient must be constant in the catalytic variable")
        s0 = _rational_sqrt(p0[0])
        if not s0:
            raise BranchError("zero constant term")
        half = 1 / (2 * s0)
        out = [[s0]]
        for n in range(1, len(self._c)):
            acc = list(self._c[n])
            for i in range(1, n):
                acc = _psub(acc, _pmul(out[i], out[n - i]))
            out.append(_pscale(acc, half))
        return CatalyticSeries._raw(out, self.name)

    def to_json(self) -> str:
        return json.dumps(
            {"order": self.order, "var": self.name, "coeffs": [[str(c) for c in p] for p in self._c]}
        )

    @classmethod
    def from_json(cls, text: str) -> CatalyticSeries:
        data = json.loads(text)
        return cls([[rational(s) for s in p] for p in data["coeffs"]], data["order"], data["var"])


def _cat_inverse(b: CatalyticSeries) -> CatalyticSeries:
    p0 = _ptrim(list(b._c[0]))
    if len(p0) != 1 or not p0[0]:
        raise SingularDivisionError("z^0 coefficient must be a nonzero constant")
    inv0 = 1 / p0[0]
    out = [[inv0]]
    for n in range(1, len(b._c)):
        acc = [ZERO]
        for i in range(1, n + 1):
            q = b._c[i]
            if len(q) > 1 or q[0]:
                acc = _padd(acc, _pmul(q, out[n - i]))
        out.append(_pscale(acc, -inv0))
    return CatalyticSeries._raw(out, b.name)
