
import pytest
from gmpy2 import mpq

from mapcuts import mapgf as G
from mapcuts.qseries import PowerSeries, Z


def test_M_matches_closed_count():
    M = G.series_M(30)
    assert all(M[n] == G.mn_closed(n) for n in range(31))
    assert list(M.coeffs[:6]) == [1, 2, 9, 54, 378, 2916]


def test_B_coefficients():
    B = G.series_B(8).at(1)
    assert list(B.coeffs) == [0, 0, 1, 2, 6, 22, 91, 408, 1938]


def test_V_u1_identity():
    V, u1 = G.series_V_u1(40)
    assert u1 * (1 - V) == PowerSeries.constant(1, 40)
    z = Z(40)
    assert u1 == 1 + z * u1**3


def test_Bx_Bz_against_functional_equation():
    N = 25
    Bx, Bz = G.series_Bx_Bz(N)
    assert Bz == G.series_B(N + 1).at(1).derivative()
    assert Bx == G.series_B_functional_dx(N).at(1)


def test_Bbullet_at_one_is_Bx():
    N = 10
    Bb = G.series_Bbullet(N).at(1)
    Bx, _ = G.series_Bx_Bz(N)
    assert Bb == Bx


def test_Ea_and_M0_prefix():
    assert list(G.series_Ea(7).coeffs) == [0, 0, 8, 64, 548, 4959, 46770, 455151]
    assert list(G.series_M0(6).coeffs) == [0, 2, 3, 15, 96, 705, 5649]


def test_block_moments_match_bivariate_solution():
    N = 6
    Mw = G.series_blocks(N)
    M, dM, d2M = G.block_moment_series(N + 1)
    for n in range(1, N + 1):
        row = Mw[n]
        assert sum(row) == M[n]
        assert sum(k * c for k, c in enumerate(row)) == dM[n]
        assert sum(k * (k - 1) * c for k, c in enumerate(row)) == d2M[n]


def test_q_prefix_and_p():
    _, _, q = G.degree_series(5)
    assert [q[1], q[2], q[3]] == [mpq(4, 9), mpq(56, 243), mpq(848, 6561)]
    p = G.prob_root_cut(60)
    assert p["closed_error"] < 1e-12
    assert p["branch"] == (-1, -1)


def test_clt_blocks_exact():
    c = G.clt_constants(G.rho_blocks)
    assert (c.c, c.sigma2) == (mpq(1, 2), mpq(3, 8))
    num = G.clt_constants(G.rho_blocks, mode="numeric")
    assert abs(float(num.c) - 0.5) < 1e-9 and abs(float(num.sigma2) - 0.375) < 1e-8


def test_clt_constant_rho_is_degenerate():
    c = G.clt_constants(lambda y: mpq(1, 5) + 0 * y)
    assert c.c == 0 and c.sigma2 == 0


def test_slope_estimate():
    r = G.estimate_c_from_series(120, "cut")
    assert r["error"] < 5e-3
    with pytest.raises(ValueError):
        G.estimate_c_from_series(50)


def test_singular_amplitude_calibration():
    z = Z(200)
    f = (1 - 4 * z).sqrt()        # amplitude 1 of (1-4z)^{1/2}
    a = G.singular_amplitude(f, mpq(1, 4), mpq(1, 2))
    assert abs(float(a) - 1) < 1e-6


def test_bundle_check():
    b = G.build_bundle(8)
    b.check()


def test_vertex_moments_match_enumeration():
    from mapcuts.mapstruct import enumeration_totals
    vm = G.vertex_moments(6)
    for n, mean, var in vm:
        t = enumeration_totals(n)
        assert mean == mpq(t["vertices"], t["maps"]) == mpq(n, 2) + 1
        assert var == mpq(t["vertex_pairs"], t["maps"]) - mean * mean


def test_vertex_variance_grows_like_5n_over_32():
    vm = G.vertex_moments(60)
    assert all(m == mpq(n, 2) + 1 for n, m, _ in vm)
    slope = float((vm[59][2] - vm[29][2]) / 30)
    assert abs(slope - 5 / 32) < 1e-3
