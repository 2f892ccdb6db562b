"""Monte-Carlo orchestration, statistics aggregation and machine-readable reports.

Each ``cmd_*`` function returns ``(report, ok)``: ``report`` is a plain dict
(ready for JSON, with ``"schema": 1``) and ``ok`` is False when an internal
cross-check or a tolerance failed. Sample ``i`` of a run always uses the RNG
stream ``(seed, i)``, so results do not depend on the thread count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import mpmath
import numpy as np
from gmpy2 import mpq

from . import mapgf, mapstruct, subcrit
from .sampler import SeededRng, sample_map_stats

SCHEMA = 1
ORDER_CAP = 400
SAMPLE_COLUMNS = ["sample_id", "n", "cut_vertices", "blocks", "vertices", "root_degree"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Tolerance:
    target: float
    tol: float
    kind: str          # "abs", "rel", "exact" or "interval" (target = (lo, hi))
    provenance: str

    def check(self, value) -> tuple[bool, float]:
        if self.kind == "exact":
            err = float(abs(mpq(value) - self.target))
            return err == 0, err
        if self.kind == "interval":
            lo, hi = self.target
            v = float(value)
            err = max(lo - v, v - hi, 0.0)
            return err == 0, err
        err = abs(float(value) - float(self.target))
        if self.kind == "rel":
            err /= abs(float(self.target))
        return err <= self.tol, err


_S17 = math.sqrt(17)
_S3 = math.sqrt(3)

# every target constant with the tolerance it is held to and where it comes from
TOLERANCES: dict[str, Tolerance] = {
    "c_slope": Tolerance((5 - _S17) / 4, 5e-3, "abs",
                         "cut-vertex constant (5-sqrt 17)/4; slope of exact means over n in [100, 200]"),
    "p_root_cut": Tolerance((5 - _S17) / 2, 1e-9, "abs",
                            "root-cut probability 1 - q(3/4) = (5-sqrt 17)/2"),
    "c_from_p": Tolerance((5 - _S17) / 4, 1e-9, "abs",
                          "c = p/2, the root-cut probability route"),
    "blocks_c": Tolerance(mpq(1, 2), 0, "exact", "blocks per edge; rational rho(w) = 4/(3(w+3)^2)"),
    "blocks_sigma2": Tolerance(mpq(3, 8), 0, "exact", "block-count variance per edge; rational rho(w)"),
    "outerplanar_c": Tolerance(mpq(1, 4), 0, "exact", "outerplanar cut vertices per vertex"),
    "outerplanar_sigma2": Tolerance(mpq(5, 32), 0, "exact", "outerplanar variance per vertex"),
    "bipartite_c": Tolerance((_S3 - 1) / 2, 1e-6, "abs", "bipartite outerplanar, numeric branch continuation"),
    "bipartite_sigma2": Tolerance((11 * _S3 - 17) / 12, 1e-6, "abs", "bipartite outerplanar variance"),
    "sp_z1": Tolerance(0.1119109, 1e-4, "abs", "series-parallel radius z1 (seven reference digits)"),
    "sp_M1": Tolerance(1.23150, 1e-4, "abs", "series-parallel M(z1)"),
    "sp_witness": Tolerance(0.16972, 1e-4, "abs", "series-parallel z1 M(z1)^2 < 3 - 2 sqrt 2"),
    "general_witness": Tolerance(4 / 27, 1e-9, "abs", "general maps are critical: z1 M(z1)^2 = 4/27 = z0"),
    "general_z1": Tolerance(1 / 12, 1e-9, "abs", "general maps: z1 equals 1/12, the radius of M"),
    "general_gap": Tolerance(0.0, 1e-9, "abs", "general maps: zero subcriticality gap"),
    "gw_outer_p0": Tolerance(mpq(3, 4), 0, "exact", "outerplanar offspring law P(xi = 0)"),
    "gw_outer_var": Tolerance(mpq(18), 0, "exact", "outerplanar offspring variance"),
    "gw_bip_p0": Tolerance((3 - _S3) / 2, 1e-9, "abs", "bipartite offspring law P(xi = 0)"),
    "gw_bip_var": Tolerance(9 * (_S3 - 1), 1e-9, "abs", "bipartite offspring variance"),
    "mc_mean_fraction": Tolerance((0.216, 0.2225), 0.0, "interval",
                                  "simulated mean X_n/n at n = 1e5 (bias O(1/n) plus sampling error)"),
    "mc_var_per_n": Tolerance(0.0828, 0.25, "rel", "simulated variance of X_n over n (0.082788)"),
    "mc_vertex_var": Tolerance(25 / 32, 0.20, "rel", "vertex-count variance per edge 25/32"),
    "gw_skewness": Tolerance(0.0, 0.2, "abs", "standardised skewness of GW cut counts"),
    "singular_constants": Tolerance(0.0, 0.02, "abs", "relative error of extrapolated singular constants"),
}


def tolerance_table() -> list[dict]:
    return [
        {"name": k, "target": _plain(t.target), "tol": t.tol, "kind": t.kind, "provenance": t.provenance}
        for k, t in TOLERANCES.items()
    ]


@dataclass
class RunConfig:
    command: str
    n: int = 1000
    samples: int = 100
    seed: int = 0
    threads: int = 1
    order: int = 20
    out: str | None = None
    format: str = "json"
    cls: str = "outerplanar"
    which: str = "M"
    bins: str | int = "fd"

    def validate(self) -> None:
        if self.samples < 1:
            raise ConfigError("samples must be at least 1")
        if self.n < 0:
            raise ConfigError("n must be nonnegative")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.format!r}")
        if not 1 <= self.order <= ORDER_CAP:
            raise ConfigError(f"order must be in 1..{ORDER_CAP}")


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

@dataclass
class MomentSums:
    """Exact integer sums of ``x`` and ``x^2``; merging is associative."""
    count: int = 0
    s1: int = 0
    s2: int = 0

    def add(self, values) -> MomentSums:
        for v in values:
            v = int(v)
            self.count += 1
            self.s1 += v
            self.s2 += v * v
        return self

    def merge(self, other: MomentSums) -> MomentSums:
        return MomentSums(self.count + other.count, self.s1 + other.s1, self.s2 + other.s2)

    @property
    def mean(self) -> float:
        return float(mpq(self.s1, self.count))

    @property
    def variance(self) -> float:
        """Unbiased sample variance, exact until the final conversion."""
        if self.count < 2:
            return 0.0
        m = self.count
        return float(mpq(m * self.s2 - self.s1 * self.s1, m * (m - 1)))

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.count) if self.count else float("nan")

    def summary(self) -> dict:
        return {"mean": self.mean, "variance": self.variance, "stderr": self.stderr,
                "count": self.count, "sum": self.s1, "sum_sq": self.s2}


def histogram(values, bins="fd") -> dict:
    """Histogram with Freedman-Diaconis edges by default (any numpy rule or a count)."""
    x = np.asarray(values, dtype=float)
    if len(x) == 0:
        return {"edges": [], "counts": []}
    if np.ptp(x) == 0:
        edges = np.array([x[0] - 0.5, x[0] + 0.5])
    else:
        edges = np.histogram_bin_edges(x, bins=bins)
    counts, edges = np.histogram(x, bins=edges)
    return {"edges": edges.tolist(), "counts": counts.tolist(), "rule": str(bins)}


def standardized_moments(values) -> dict:
    x = np.asarray(values, dtype=float)
    sd = x.std()
    if sd == 0:
        return {"skewness": 0.0, "excess_kurtosis": 0.0}
    zs = (x - x.mean()) / sd
    return {"skewness": float(np.mean(zs**3)), "excess_kurtosis": float(np.mean(zs**4) - 3)}


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _sample_block(n: int, seed: int, ids: range) -> np.ndarray:
    out = np.empty((len(ids), 6), dtype=np.int64)
    for j, i in enumerate(ids):
        st = sample_map_stats(n, SeededRng(seed, i)) if n > 0 else \
            {"cut_vertices": 0, "blocks": 0, "vertices": 1, "root_degree": 0}
        out[j] = (i, n, st["cut_vertices"], st["blocks"], st["vertices"], st["root_degree"])
    return out


def sample_rows(n: int, samples: int, seed: int, threads: int = 1) -> np.ndarray:
    """One row per sample in ``SAMPLE_COLUMNS`` order, sorted by sample id."""
    if threads == 1:
        return _sample_block(n, seed, range(samples))
    chunk = max(1, math.ceil(samples / (4 * threads)))
    parts = [range(a, min(a + chunk, samples)) for a in range(0, samples, chunk)]
    with ThreadPoolExecutor(threads) as ex:
        blocks = list(ex.map(lambda r: _sample_block(n, seed, r), parts))
    return np.concatenate(blocks)


def _plain(x):
    """JSON-friendly form: rationals as "p/q", mpmath numbers as floats."""
    if isinstance(x, bool) or x is None or isinstance(x, (str, int)):
        return x
    if type(x).__name__ == "mpq":
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else int(x.numerator)
    if isinstance(x, (float, np.floating, mpmath.mpf)):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(v) for v in x]
    return str(x)


def _report(command: str, **kw) -> dict:
    return {"schema": SCHEMA, "command": command, **_plain(kw)}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

SERIES = ("M", "Ea", "M0", "B", "Bx", "Bz", "q", "blocks")


def cmd_series(order: int, which: str = "M") -> tuple[dict, bool]:
    """Exact coefficients ``0..order`` of one generating function."""
    if not 1 <= order <= ORDER_CAP:
        raise ConfigError(f"order {order} outside 1..{ORDER_CAP}")
    if which not in SERIES:
        raise ConfigError(f"unknown series {which!r}; choose from {', '.join(SERIES)}")
    rows = []
    ok = True
    if which == "M":
        s = mapgf.series_M(order)
        ok = all(s[n] == mapgf.mn_closed(n) for n in range(order + 1))
        rows = [{"n": n, "coefficient": s[n]} for n in range(order + 1)]
    elif which == "Ea":
        s = mapgf.series_Ea(order)
        rows = [{"n": n, "coefficient": s[n], "mean_cut_vertices": s[n] / mapgf.mn_closed(n)}
                for n in range(order + 1)]
    elif which == "M0":
        s = mapgf.series_M0(order)
        rows = [{"n": n, "coefficient": s[n]} for n in range(order + 1)]
    elif which == "B":
        s = mapgf.series_B(order).at(1)
        rows = [{"n": n, "coefficient": s[n]} for n in range(order + 1)]
    elif which in ("Bx", "Bz"):
        bx, bz = mapgf.series_Bx_Bz(order)
        s = bx if which == "Bx" else bz
        rows = [{"n": n, "coefficient": s[n]} for n in range(order + 1)]
    elif which == "q":
        _, _, q = mapgf.degree_series(order)
        rows = [{"n": n, "coefficient": q[n]} for n in range(1, order + 1)]
    elif which == "blocks":
        M, Mw, _ = mapgf.block_moment_series(order + 1)
        means = mapgf.block_means(order)
        rows = [{"n": 0, "coefficient": 0, "mean_blocks": 0}]
        for n, mean, var in means:
            rows.append({"n": n, "coefficient": Mw[n] + M[n], "mean_blocks": mean, "variance_blocks": var})
    return _report("series", which=which, order=order, rows=rows), ok


def cmd_enumerate(n: int) -> tuple[dict, bool]:
    """Exhaustive totals over all maps with ``n`` edges, checked against the series."""
    if not 0 <= n <= mapstruct.MAX_ENUM_N:
        raise ConfigError(f"enumeration needs 0 <= n <= {mapstruct.MAX_ENUM_N}")
    t0 = time.perf_counter()
    tot = mapstruct.enumeration_totals(n)
    N = max(n, 2)
    M = mapgf.series_M(N)
    Ea = mapgf.series_Ea(N)
    M0 = mapgf.series_M0(N)
    Mo, Mw, _ = mapgf.block_moment_series(N + 1)
    expected = {
        "maps": mapgf.mn_closed(n),
        "distinct": mapgf.mn_closed(n),
        "cut_vertices": Ea[n],
        "root_not_cut": M0[n],
        "blocks": Mw[n] + Mo[n] if n else 0,
        "vertices": M[n] * (n + 2) // 2,
    }
    checks = {k: {"enumerated": tot[k], "series": v, "ok": tot[k] == v} for k, v in expected.items()}
    ok = all(c["ok"] for c in checks.values())
    return _report("enumerate", n=n, totals=tot, checks=checks, ok=ok,
                   seconds=time.perf_counter() - t0), ok


def cmd_sample(cfg: RunConfig) -> tuple[dict, bool]:
    """Sample ``cfg.samples`` uniform maps with ``cfg.n`` edges and aggregate."""
    cfg.validate()
    t0 = time.perf_counter()
    rows = sample_rows(cfg.n, cfg.samples, cfg.seed, cfg.threads)
    stats = {}
    for j, name in enumerate(SAMPLE_COLUMNS[2:], start=2):
        stats[name] = MomentSums().add(rows[:, j].tolist()).summary()
    # Euler: every row must have vertices <= n + 1 and cuts < vertices
    ok = bool(np.all(rows[:, 4] <= cfg.n + 1) and np.all(rows[:, 2] <= np.maximum(rows[:, 4] - 1, 0)))
    n = max(cfg.n, 1)
    derived = {
        "mean_cut_fraction": stats["cut_vertices"]["mean"] / n,
        "cut_variance_per_n": stats["cut_vertices"]["variance"] / n,
        "mean_block_fraction": stats["blocks"]["mean"] / n,
        "vertex_mean_target": cfg.n / 2 + 1,
        "vertex_variance_target": 25 * cfg.n / 32,
    }
    rep = _report(
        "sample", n=cfg.n, samples=cfg.samples, seed=cfg.seed, threads=cfg.threads,
        stats=stats, derived=derived, histogram=histogram(rows[:, 2], cfg.bins),
        seconds=time.perf_counter() - t0, ok=ok,
    )
    rep["columns"] = SAMPLE_COLUMNS
    rep["rows"] = rows.tolist()
    return rep, ok


def _check(name: str, value, results: list) -> bool:
    ok, err = TOLERANCES[name].check(value)
    t = TOLERANCES[name]
    results.append({"name": name, "computed": _plain(value), "target": _plain(t.target),
                    "error": err, "tol": t.tol, "ok": ok, "provenance": t.provenance})
    return ok


def cmd_constants(order: int = 200) -> tuple[dict, bool]:
    """Every constant by its analytic route, against the tolerance table."""
    if not 120 <= order <= ORDER_CAP:
        raise ConfigError(f"constants need 120 <= order <= {ORDER_CAP}")
    t0 = time.perf_counter()
    res: list = []
    est = mapgf.estimate_c_from_series(order, "cut")
    _check("c_slope", est["slope"], res)
    p = mapgf.prob_root_cut()
    _check("p_root_cut", p["p_closed"], res)
    _check("c_from_p", p["p_closed"] / 2, res)
    b = mapgf.clt_constants(mapgf.rho_blocks)
    _check("blocks_c", b.c, res)
    _check("blocks_sigma2", b.sigma2, res)
    o = subcrit.clt_for_class("outerplanar")
    _check("outerplanar_c", o.c, res)
    _check("outerplanar_sigma2", o.sigma2, res)
    bp = subcrit.clt_for_class("bipartite-outerplanar")
    _check("bipartite_c", bp.c, res)
    _check("bipartite_sigma2", bp.sigma2, res)
    sp = subcrit.check_subcritical("series-parallel")
    _check("sp_z1", sp["z1"], res)
    _check("sp_M1", sp["M1"], res)
    _check("sp_witness", sp["witness"], res)
    g = subcrit.check_subcritical("general")
    _check("general_witness", g["witness"], res)
    _check("general_z1", g["z1"], res)
    _check("general_gap", g["gap"], res)
    gaps = {}
    for name in subcrit.REGISTRY:
        r = g if name == "general" else subcrit.check_subcritical(name)
        gaps[name] = {"gap": r["gap"], "subcritical": r["subcritical"]}
    ok = all(r["ok"] for r in res) and all(gaps[k]["subcritical"] for k in gaps if k != "general")
    return _report("constants", order=order, results=res, gaps=gaps, ok=ok,
                   seconds=time.perf_counter() - t0), ok


def cmd_gw(cfg: RunConfig) -> tuple[dict, bool]:
    """Conditioned Galton-Watson simulation of cut vertices in a tree-encoded class."""
    cfg.validate()
    cls = subcrit.get_class(cfg.cls)
    if cls.convention != "tree":
        raise ConfigError(f"class {cfg.cls!r} has no tree encoding")
    if cfg.n < 1:
        raise ConfigError("n must be at least 1")
    t0 = time.perf_counter()
    law = subcrit.gw_offspring(cls)
    # stream 0 of the seed drives the batched rejection sampler
    cuts = subcrit.simulate_cut_counts(cfg.n, law, cfg.samples, SeededRng(cfg.seed, 0))
    st = subcrit.leaf_stats(cfg.n, cuts)
    clt = subcrit.clt_for_class(cfg.cls)
    c, s2 = float(clt.c), float(clt.sigma2)
    sd = math.sqrt(st["variance"]) if st["variance"] > 0 else 1.0
    std = (cuts - st["mean"]) / sd
    # the offspring law itself must be critical, sum to one and match its moments
    ok = abs(float(law.mean) - 1) < 1e-9 and abs(law.probs.sum() - 1) < 1e-12
    checks: list = []
    prefix = {"outerplanar": "gw_outer", "bipartite-outerplanar": "gw_bip"}.get(cfg.cls)
    if prefix:
        ok &= _check(prefix + "_p0", law.p0, checks)
        ok &= _check(prefix + "_var", law.variance, checks)
    rep = _report(
        "gw", cls=cfg.cls, n=cfg.n, samples=cfg.samples, seed=cfg.seed,
        law={"p0": law.p0, "mean": law.mean, "variance": law.variance, "K": law.K, "tail": law.tail},
        stats=MomentSums().add(cuts.tolist()).summary(),
        mean_fraction=st["mean_fraction"], se_fraction=st["se_fraction"],
        variance_per_n=st["variance_per_n"], target_c=c, target_sigma2=s2,
        z_score=(st["mean_fraction"] - c) / st["se_fraction"] if st["samples"] > 1 and st["se_fraction"] > 0 else 0.0,
        skewness=st["skewness"], excess_kurtosis=st["excess_kurtosis"],
        histogram=histogram(std, cfg.bins), law_checks=checks,
        seconds=time.perf_counter() - t0, ok=ok,
    )
    rep["columns"] = ["sample_id", "n", "cut_vertices"]
    rep["rows"] = [[i, cfg.n, int(x)] for i, x in enumerate(cuts)]
    return rep, ok


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _flatten(d: dict, prefix: str = "") -> list[tuple[str, object]]:
    out = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.extend(_flatten(v, key + "."))
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            for i, item in enumerate(v):
                out.extend(_flatten(item, f"{key}.{i}."))
        else:
            out.append((key, json.dumps(v) if isinstance(v, list) else v))
    return out


def render(report: dict, fmt: str) -> str:
    """JSON, or CSV: per-sample rows if present, else series rows, else key/value pairs."""
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if "rows" in report and "columns" in report:
        w.writerow(report["columns"])
        w.writerows(report["rows"])
    elif "rows" in report:
        cols = list(dict.fromkeys(k for r in report["rows"] for k in r))
        w.writerow(cols)
        for r in report["rows"]:
            w.writerow([r.get(c, "") for c in cols])
    else:
        w.writerow(["key", "value"])
        w.writerows(_flatten(report))
    return buf.getvalue()


def write_report(report: dict, fmt: str, out: str | None) -> str:
    text = render(report, fmt)
    if out:
        with open(out, "w") as f:
            f.write(text)
    return text
