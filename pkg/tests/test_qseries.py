import json
from fractions import Fraction

import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from mapcuts.qseries import (
    BranchError, CatalyticSeries, CompositionError, NotInvertibleError, OrderMismatchError,
    PowerSeries, SingularDivisionError, Z, align, gsqrt, ps_compose, ps_div, ps_eval,
    ps_newton_implicit, ps_revert, rational,
)

small = st.fractions(min_value=-5, max_value=5, max_denominator=7)
ORDER = 8


def series(lead=None):
    rest = st.lists(small, min_size=ORDER, max_size=ORDER)
    if lead is None:
        return st.builds(lambda c0, r: PowerSeries([c0] + r, ORDER), small, rest)
    return st.builds(lambda c0, r: PowerSeries([c0] + r, ORDER), lead, rest)


nonzero_lead = small.filter(lambda x: x != 0)


def test_rational_coercion():
    assert rational("3/4") == mpq(3, 4)
    assert rational(Fraction(1, 3)) == mpq(1, 3)
    assert rational(0.5) == mpq(1, 2)
    assert rational(7) == 7


def test_geometric_series_inverse():
    z = Z(10)
    g = 1 / (1 - z)
    assert list(g.coeffs) == [1] * 11


def test_order_mismatch_raises():
    with pytest.raises(OrderMismatchError):
        Z(3) + Z(4)


def test_division_by_z_loses_order():
    z = Z(6)
    q = ps_div(z * (1 + z), z)
    assert q.order == 5
    assert list(q.coeffs[:2]) == [1, 1]
    with pytest.raises(SingularDivisionError):
        ps_div(PowerSeries([1, 1], 6), z)


def test_sqrt_odd_valuation():
    with pytest.raises(BranchError):
        gsqrt(Z(5))


def test_catalan_by_newton():
    z = Z(12)
    C = ps_newton_implicit(lambda f: z * f * f - f + 1, PowerSeries([1], 12))
    assert list(C.coeffs[:8]) == [1, 1, 2, 5, 14, 42, 132, 429]


def test_compose_needs_zero_constant():
    with pytest.raises(CompositionError):
        ps_compose(Z(3), 1 + Z(3))


def test_revert_needs_linear_term():
    with pytest.raises(NotInvertibleError):
        ps_revert(Z(4) * Z(4))


def test_eval_partial_sum():
    s = PowerSeries([1, 2, 3], 2)
    assert ps_eval(s, "1/2") == 1 + 1 + mpq(3, 4)
    assert s.eval(1, "float") == 6.0


def test_align_truncates_to_min():
    a, b = align(Z(5), Z(3))
    assert a.order == b.order == 3


@given(series(), series(nonzero_lead))
def test_div_then_mul(a, b):
    assert (a / b) * b == a


@given(series(), series(), series())
def test_distributive(a, b, c):
    assert a * (b + c) == a * b + a * c


@given(series(st.just(Fraction(1))))
def test_sqrt_squares_back(a):
    s = a.sqrt()
    assert s * s == a
    assert s[0] == 1


@given(series(), series())
def test_product_rule(a, b):
    lhs = (a * b).derivative()
    rhs = a.derivative() * b.truncate(ORDER - 1) + a.truncate(ORDER - 1) * b.derivative()
    assert lhs == rhs


@given(series(nonzero_lead))
def test_revert_roundtrip(a):
    f = a.shift(1).truncate(ORDER)  # zero constant, nonzero linear term
    g = ps_revert(f)
    assert ps_compose(f, g) == Z(ORDER)
    assert ps_compose(g, f) == Z(ORDER)


@given(series(), series(st.just(Fraction(0))), series(st.just(Fraction(0))))
def test_compose_associates_with_product(a, g, h):
    # (a o g) * (a o g) == (a*a) o g
    assert ps_compose(a, g) * ps_compose(a, g) == ps_compose(a * a, g)


@given(series())
def test_integral_derivative(a):
    assert a.integral().derivative() == a


@given(series())
def test_json_roundtrip(a):
    text = a.to_json()
    json.loads(text)
    assert PowerSeries.from_json(text) == a


def test_catalytic_basics():
    u = CatalyticSeries.variable(4, "u")
    one = CatalyticSeries.from_series(PowerSeries.constant(1, 4), "u")
    s = (one + u) * (one + u)
    assert s.at(1) == PowerSeries.constant(4, 4)
    assert s.var_derivative().at(0) == PowerSeries.constant(2, 4)
    assert CatalyticSeries.from_json(s.to_json()) == s


def test_catalytic_div_linear():
    z = Z(5)
    u = CatalyticSeries.variable(5, "u")
    one = CatalyticSeries.from_series(PowerSeries.constant(1, 5), "u")
    # (u - 1/(1-z)) * (1 + u z) divided by the root gives back (1 + u z)
    root = 1 / (1 - z)
    p = (u - CatalyticSeries.from_series(root, "u")) * (one + u * CatalyticSeries.from_series(z, "u"))
    q = p.div_linear(root)
    assert q == one + u * CatalyticSeries.from_series(z, "u")
