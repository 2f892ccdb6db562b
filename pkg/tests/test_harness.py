import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mapcuts import harness as H
from mapcuts.cli import main


@given(st.lists(st.integers(-10**6, 10**6), min_size=2, max_size=60), st.integers(0, 59))
def test_moment_merge_is_exact(xs, cut):
    cut = min(cut, len(xs))
    whole = H.MomentSums().add(xs)
    parts = H.MomentSums().add(xs[:cut]).merge(H.MomentSums().add(xs[cut:]))
    assert parts == whole
    assert whole.variance >= 0
    assert whole.variance == pytest.approx(float(np.var(xs, ddof=1)), rel=1e-9, abs=1e-9)


@given(st.lists(st.integers(0, 500), min_size=1, max_size=200))
def test_histogram_counts_sum(xs):
    h = H.histogram(xs)
    assert sum(h["counts"]) == len(xs)
    assert len(h["edges"]) == len(h["counts"]) + 1


def test_histogram_override():
    h = H.histogram(list(range(100)), bins=5)
    assert len(h["counts"]) == 5


def test_tolerance_kinds():
    assert H.Tolerance((0.1, 0.2), 0, "interval", "").check(0.15)[0]
    assert not H.Tolerance((0.1, 0.2), 0, "interval", "").check(0.25)[0]
    assert not H.Tolerance(1.0, 0.1, "rel", "").check(1.2)[0]
    table = H.tolerance_table()
    assert all(row["provenance"] for row in table)


def test_order_cap():
    with pytest.raises(H.ConfigError):
        H.cmd_series(401)
    with pytest.raises(H.ConfigError):
        H.cmd_series(5, "nope")


def test_series_examples():
    rep, ok = H.cmd_series(5, "M")
    assert ok and [r["coefficient"] for r in rep["rows"]] == [1, 2, 9, 54, 378, 2916]
    rep, _ = H.cmd_series(3, "q")
    assert [r["coefficient"] for r in rep["rows"]] == ["4/9", "56/243", "848/6561"]
    rep, _ = H.cmd_series(6, "Ea")
    assert rep["rows"][6]["coefficient"] == 46770
    rep, _ = H.cmd_series(4, "blocks")
    assert rep["rows"][2]["coefficient"] == 17


@pytest.mark.parametrize("n", [0, 1, 2, 5])
def test_enumerate_cross_checks(n):
    rep, ok = H.cmd_enumerate(n)
    assert ok
    if n == 1:
        assert rep["totals"]["cut_vertices"] == 0
    if n == 2:
        assert rep["totals"]["distinct"] == 9


def test_sample_deterministic_across_threads():
    cfg = H.RunConfig("sample", n=300, samples=24, seed=9)
    a, ok = H.cmd_sample(cfg)
    cfg.threads = 3
    b, _ = H.cmd_sample(cfg)
    assert ok and a["rows"] == b["rows"] and a["stats"] == b["stats"]
    assert sum(a["histogram"]["counts"]) == 24


def test_sample_trivial():
    rep, ok = H.cmd_sample(H.RunConfig("sample", n=1, samples=1, seed=0))
    assert ok and rep["rows"][0][2] == 0
    assert rep["schema"] == 1


def test_gw_trivial_and_config():
    rep, ok = H.cmd_gw(H.RunConfig("gw", n=2, samples=3, seed=1, cls="outerplanar"))
    assert ok and rep["stats"]["mean"] == 0
    with pytest.raises(H.ConfigError):
        H.cmd_gw(H.RunConfig("gw", n=10, samples=3, cls="series-parallel"))


def test_render_formats():
    rep, _ = H.cmd_sample(H.RunConfig("sample", n=20, samples=3, seed=2))
    rows = list(csv.reader(io.StringIO(H.render(rep, "csv"))))
    assert rows[0] == H.SAMPLE_COLUMNS and len(rows) == 4
    assert json.loads(H.render(rep, "json"))["schema"] == 1


def test_cli_series_csv(capsys):
    assert main(["series", "--order", "3", "--which", "q", "--format", "csv"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[1:] == ["1,4/9", "2,56/243", "3,848/6561"]


def test_cli_sample_to_file(tmp_path):
    out = tmp_path / "s.json"
    assert main(["sample", "--n", "50", "--samples", "5", "--seed", "4", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["schema"] == 1 and rep["seed"] == 4 and len(rep["rows"]) == 5


def test_cli_config_error(capsys):
    assert main(["series", "--order", "500"]) == 2
    assert "order" in capsys.readouterr().err


def test_cli_gw_reports_moments(capsys):
    assert main(["gw", "--n", "200", "--samples", "20", "--seed", "1"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert "skewness" in rep and "excess_kurtosis" in rep
    assert all(c["ok"] for c in rep["law_checks"])


def test_cli_nonzero_exit_on_failed_check(monkeypatch):
    monkeypatch.setattr(H, "cmd_enumerate", lambda n: ({"schema": 1, "ok": False}, False))
    assert main(["enumerate", "--n", "2"]) == 1


def test_constants_command():
    rep, ok = H.cmd_constants(160)
    assert ok, [r for r in rep["results"] if not r["ok"]]
    names = {r["name"] for r in rep["results"]}
    assert {"p_root_cut", "blocks_sigma2", "bipartite_c", "general_witness"} <= names
