"""Command-line front end.

Subcommands: theory, simulate, compare, lambda-opt, separability, validate.
Exit codes: 0 success, 1 config error, 2 fatal numerical nonconvergence,
3 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from .config import echo, load_config
from .errors import ConfigError, NumericalError
from .sweep import run_separability, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfcurves",
        description="Asymptotic learning curves for random-features GLMs "
                    "and their finite-size validation.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("theory", "sweep the asymptotic theory over a grid"),
        ("simulate", "sweep finite-size Monte-Carlo experiments"),
        ("compare", "theory and simulation side by side"),
        ("lambda-opt", "theory sweep with the ridge strength optimised per point"),
        ("separability", "linear-separability threshold curves"),
        ("validate", "check a config file and echo the normalised form"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="YAML config file")
        cmd.add_argument("--out", default=None, help="override the CSV output path")
        cmd.add_argument("--seed", type=int, default=None, help="override the master seed")
        cmd.add_argument("--threads", type=int, default=1,
                         help="worker threads for simulation seeds")
        cmd.add_argument("--quad-nodes", type=int, default=None,
                         help="override the xi quadrature order")
    return parser


def _apply_overrides(cfg: dict, args) -> dict:
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.quad_nodes is not None:
        cfg["solver"]["quad_nodes"] = args.quad_nodes
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        print(echo(cfg))
        return EXIT_OK

    expected_mode = {"theory": "theory", "simulate": "simulate", "compare": "compare",
                     "lambda-opt": "theory", "separability": "separability"}[args.command]
    if cfg["mode"] != expected_mode:
        print(f"config error: mode {cfg['mode']!r} does not match "
              f"subcommand {args.command!r}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "lambda-opt":
        cfg["lam_policy"] = "optimal"
        cfg["lam"] = None
    cfg = _apply_overrides(cfg, args)

    try:
        if args.command == "separability":
            rows = run_separability(cfg, out=args.out)
            bad = [r for r in rows if r["status"] != "ok"]
            for r in bad:
                print(f"warning: {r['spectral']} n/d={r['n_over_d']}: {r['status']}",
                      file=sys.stderr)
        else:
            rows = run_sweep(cfg, out=args.out, threads=args.threads)
            if args.command == "lambda-opt" and all(not r.get("converged") for r in rows):
                print("error: no grid point converged under the lambda search",
                      file=sys.stderr)
                return EXIT_NUMERICAL
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {len(rows)} rows" + (f" to {args.out or cfg.get('output')}"
                                       if (args.out or cfg.get("output")) else ""))
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
