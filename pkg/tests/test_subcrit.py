import math

import mpmath
import numpy as np
import pytest
from gmpy2 import mpq

from mapcuts import subcrit as S
from mapcuts.sampler import make_rng

S3 = math.sqrt(3)


@mpmath.workdps(40)
def test_outerplanar_closed_forms():
    f = S.outerplanar_forms()
    assert f.M_closed(mpq(1, 8)) == mpmath.mpf(1) / 6
    z = mpmath.mpf("0.1")
    assert abs(f.M_bivariate(z, 1) - f.M_closed(z)) < 1e-25
    # series of the closed form solves the tree equation
    N = 15
    M = f.M_series(N)
    A = f.A_series(N)
    from mapcuts.qseries import Z, ps_compose
    assert M * (1 - ps_compose(A, M)) == Z(N)
    for y in ("0.8", "0.95", "1.1", "1.2"):
        assert abs(f.rho(mpmath.mpf(y)) - f.rho_literal(mpmath.mpf(y))) < 1e-25
    with pytest.raises(ValueError):
        f.rho(mpmath.mpf("1.3"))


@mpmath.workdps(40)
def test_outerplanar_rho_matches_generic_continuation():
    cls = S.get_class("outerplanar")
    y = mpmath.mpf("1.03")
    assert abs(S.rho_tree(cls, y) - S._rho_outer(y)) < 1e-20


def test_bipartite_values():
    b = S.bipartite_forms()
    assert abs(float(b.z0) - 0.33674997) < 1e-7
    assert abs(float(b.z1) - (-5 + 3 * S3)) < 1e-12
    assert abs(float(b.M_value) - 2 * (2 * S3 - 3) / 3) < 1e-12
    A = b.A_series(10)
    assert list(A.coeffs[:6]) == [0, 1, 0, 1, 0, 4]


@pytest.mark.parametrize("name,sub", [("outerplanar", True), ("bipartite-outerplanar", True),
                                      ("series-parallel", True), ("general", False)])
def test_subcriticality(name, sub):
    r = S.check_subcritical(name)
    assert r["subcritical"] is sub
    assert r["gap"] >= 0


def test_general_is_critical():
    r = S.check_subcritical("general")
    assert abs(r["witness"] - mpmath.mpf(4) / 27) < 1e-9
    assert abs(r["z1"] - mpmath.mpf(1) / 12) < 1e-9
    assert abs(r["M1"] - mpmath.mpf(4) / 3) < 1e-9


def test_unknown_class():
    with pytest.raises(KeyError):
        S.get_class("planar")


def test_outerplanar_law_exact():
    law = S.gw_offspring("outerplanar")
    assert law.exact["p0"] == mpq(3, 4)
    assert law.exact["variance"] == 18
    assert law.exact["mean"] == 1
    assert law.leaf_constant() == mpq(5, 32)
    assert abs(law.probs.sum() - 1) < 1e-15
    ks = np.arange(law.K + 1)
    assert abs(float(ks @ law.probs) - 1) < 1e-10


def test_bipartite_law():
    law = S.gw_offspring("bipartite-outerplanar")
    assert abs(float(law.p0) - (3 - S3) / 2) < 1e-12
    assert abs(float(law.variance) - 9 * (S3 - 1)) < 1e-9
    assert abs(float(law.leaf_constant()) - (11 * S3 - 17) / 12) < 1e-12


def test_map_classes_have_no_tree_law():
    with pytest.raises(ValueError):
        S.gw_offspring("series-parallel")


def test_conditioned_tree_shape():
    law = S.gw_offspring("outerplanar")
    for n in (1, 2, 50, 400):
        seq = S.sample_gw_tree(n, law, make_rng(n))
        assert len(seq) == n and seq.sum() == n - 1
        # Lukasiewicz path stays nonnegative until the last step
        assert np.all(np.cumsum(seq - 1)[:-1] >= 0)


def test_degenerate_sizes():
    law = S.gw_offspring("outerplanar")
    assert set(S.simulate_cut_counts(2, law, 20, make_rng(0)).tolist()) == {0}
    assert set(S.simulate_cut_counts(1, law, 5, make_rng(0)).tolist()) == {0}


def test_leaf_mean_near_np0():
    law = S.gw_offspring("outerplanar")
    n = 1000
    cuts = S.simulate_cut_counts(n, law, 400, make_rng(3))
    leaves = (n - 1) - cuts
    se = leaves.std() / math.sqrt(len(leaves))
    assert abs(leaves.mean() - n * 0.75) < 4 * se + 2


def test_leaf_stats_fields():
    st = S.leaf_stats(10, np.array([2, 3, 4, 3]))
    assert st["mean"] == 3 and st["variance"] == pytest.approx(2 / 3)
    assert st["skewness"] == pytest.approx(0.0)
