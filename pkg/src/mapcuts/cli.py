"""Command-line entry point: ``mapcuts {series,enumerate,sample,constants,gw}``."""

from __future__ import annotations

import argparse
import sys

from . import harness
from .harness import ConfigError, RunConfig


def _bins(s: str):
    return int(s) if s.isdigit() else s


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mapcuts", description="Cut vertices and blocks of random planar maps.")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["csv", "json"], default="json")
    common.add_argument("--out", metavar="PATH", default=None, help="write the report here instead of stdout")

    s = sub.add_parser("series", parents=[common], help="exact coefficients of a generating function")
    s.add_argument("--order", type=int, default=20, help=f"last coefficient (at most {harness.ORDER_CAP})")
    s.add_argument("--which", choices=harness.SERIES, default="M")

    e = sub.add_parser("enumerate", parents=[common], help="exhaustive totals for small n, checked against series")
    e.add_argument("--n", type=int, required=True)

    sm = sub.add_parser("sample", parents=[common], help="Monte-Carlo statistics of uniform random maps")
    sm.add_argument("--n", type=int, required=True, help="number of edges")
    sm.add_argument("--samples", type=int, default=100)
    sm.add_argument("--seed", type=int, default=0)
    sm.add_argument("--threads", type=int, default=1)
    sm.add_argument("--bins", type=_bins, default="fd", help="histogram rule or bin count (default: fd)")

    c = sub.add_parser("constants", parents=[common], help="analytic constants against their targets")
    c.add_argument("--order", type=int, default=200)

    g = sub.add_parser("gw", parents=[common], help="conditioned Galton-Watson simulation")
    g.add_argument("--class", dest="cls", default="outerplanar",
                   choices=sorted(k for k, v in harness.subcrit.REGISTRY.items() if v.convention == "tree"))
    g.add_argument("--n", type=int, required=True, help="number of vertices")
    g.add_argument("--samples", type=int, default=100)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--threads", type=int, default=1)
    g.add_argument("--bins", type=_bins, default="fd")
    return p


def run(args) -> tuple[dict, bool]:
    if args.command == "series":
        return harness.cmd_series(args.order, args.which)
    if args.command == "enumerate":
        return harness.cmd_enumerate(args.n)
    if args.command == "constants":
        return harness.cmd_constants(args.order)
    cfg = RunConfig(command=args.command, n=args.n, samples=args.samples, seed=args.seed,
                    threads=args.threads, out=args.out, format=args.format, bins=args.bins)
    if args.command == "sample":
        return harness.cmd_sample(cfg)
    cfg.cls = args.cls
    return harness.cmd_gw(cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report, ok = run(args)
    except ConfigError as exc:
        print(f"mapcuts: {exc}", file=sys.stderr)
        return 2
    text = harness.write_report(report, args.format, args.out)
    if not args.out:
        sys.stdout.write(text)
    if not ok:
        print("mapcuts: cross-check failed", file=sys.stderr)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
