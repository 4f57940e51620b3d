"""Command line entry point: ``twistlab {coeffs,family,sweep,density,moments,report}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .cache import load_or_build
from .characters import enumerate_family, family_classes
from .config import FIELD_NAMES, ConfigError, convert_value, load_config
from .experiments import report_from_csv, run_density, run_moments, run_sweep

FLAG_HELP = {
    "curve": "Weierstrass coefficients a1,a2,a3,a4,a6",
    "N": "conductor",
    "eps_E": "root number of the curve (+1 or -1)",
    "X": "window parameter",
    "x_policy": "triple_log | power(theta) | fixed(x)",
    "L_policy": "extended(delta) | logX | fixed(L)",
    "k_max": "highest moment",
    "alpha": "lower end of the statistic interval",
    "beta": "upper end of the statistic interval",
    "tail_eps": "truncation tolerance for central values",
    "vanish_threshold": "|L(1/2)| below this counts as vanishing",
    "bad_prime_mode": "euler | exclude",
    "normalization": "per_d | per_X",
    "window": "smooth | indicator",
    "ells": "comma-separated list of ell values for `density`",
    "threads": "worker threads (0 reads TWISTLAB_THREADS, default 1)",
    "cache_path": "coefficient cache file or directory",
    "output_path": "directory for CSV and reports",
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="key = value config file; flags override it")
    for name in FIELD_NAMES:
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, default=None, help=FLAG_HELP.get(name))


def _config(args: argparse.Namespace):
    overrides = {}
    for name in FIELD_NAMES:
        raw = getattr(args, name, None)
        if raw is not None:
            overrides[name] = convert_value(name, raw)
    return load_config(args.config, **overrides)


def cmd_coeffs(args) -> int:
    cfg = _config(args)
    n_max = args.n_max
    table = load_or_build(cfg.curve_spec, cfg.cache_path, n_max, args.p_max)
    print(f"table: n_max={table.n_max} p_max={table.p_max} primes={table.primes.size}")
    return 0


def cmd_family(args) -> int:
    cfg = _config(args)
    curve = cfg.curve_spec
    total = 0
    for c in family_classes(curve):
        recs = enumerate_family(curve, c.kappa, c.a_mod_N0, cfg.X)
        if c.admissible:
            total += len(recs)
        print(f"kappa={c.kappa:+d} a={c.a_mod_N0:3d} admissible={int(c.admissible)} members={len(recs)}")
    print(f"admissible members with X/2 <= |d| <= 5X/2: {total}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    res = run_sweep(cfg)
    print(f"records: {len(res.records)}  written to {cfg.output_path}/sweep.csv")
    if res.distribution:
        d = res.distribution
        print(f"N(X; {d.alpha:g}, {d.beta:g}) = {d.counts} of {d.family_size}; quarter bound {d.quarter_bound:.2f}")
        print(f"proportion check: {'pass' if res.check.passed else 'fail'} (margin {res.check.margin:.3f})")
    print(f"smallest nonzero |L(1/2)|: {res.smallest_nonzero:.6g}")
    return 0


def cmd_density(args) -> int:
    cfg = _config(args)
    for r in run_density(cfg):
        pred = "" if r.pooled_ratio_to_prediction is None else f" ratio_to_main_term={r.pooled_ratio_to_prediction:.4f}"
        print(f"ell={r.ell:4d} pooled={r.pooled:.6g} ratio_to_ell1={r.pooled_ratio_to_ell1:.4f}{pred}")
    return 0


def cmd_moments(args) -> int:
    cfg = _config(args)
    res = run_moments(cfg)
    for name, rep in (("plain", res.pooled), ("weighted", res.weighted)):
        print(name, " ".join(f"k={k}:{v:.4f}" for k, v in enumerate(rep.empirical)))
    print("gaussian", " ".join(f"k={k}:{v:g}" for k, v in enumerate(res.pooled.gaussian)))
    return 0


def cmd_report(args) -> int:
    cfg = _config(args)
    rep, chk = report_from_csv(args.csv, cfg.alpha, cfg.beta)
    print(json.dumps({"distribution": rep.__dict__, "proportion_check": chk.__dict__}, default=str, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twistlab", description="Quadratic twist experiments for an elliptic curve.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coeffs", help="build or extend the coefficient cache")
    _add_config_flags(p)
    p.add_argument("--n-max", type=int, default=10**6)
    p.add_argument("--p-max", type=int, default=None)
    p.set_defaults(func=cmd_coeffs)

    for name, func, text in (
        ("family", cmd_family, "list the twist classes and their sizes"),
        ("sweep", cmd_sweep, "central values, prime sums and zero weights over X < |d| <= 2X"),
        ("density", cmd_density, "one-level density averages over an ell list"),
        ("moments", cmd_moments, "plain and zero-weighted moments of P(d; x)"),
    ):
        p = sub.add_parser(name, help=text)
        _add_config_flags(p)
        p.set_defaults(func=func)

    p = sub.add_parser("report", help="recompute aggregates from a sweep CSV")
    _add_config_flags(p)
    p.add_argument("csv", help="sweep CSV file")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
