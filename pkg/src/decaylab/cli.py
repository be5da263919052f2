"""Command-line surface.

Every subcommand funnels into the experiment runner so the on-disk
artifacts are the same whether produced interactively or from a batch
config.  Exit status: 0 when all verdicts pass, 1 when a completed run
fails a verdict, 2 on configuration or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys as _sys
from pathlib import Path

from .report import (
    ExperimentError,
    builtin_system,
    load_config,
    run_batch,
    run_experiment,
)
from .systems import validate_symmetric_dissipative

__all__ = ["main", "build_parser"]


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML experiment description")
    parser.add_argument("--out", default="decaylab-out",
                        help="output directory (default: decaylab-out)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the experiment seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="concurrent experiments in a batch")
    parser.add_argument("--keep-partial", action="store_true",
                        help="keep partial outputs when a stage fails")


def _system_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", default="damped-euler",
                        help="built-in model id (default: damped-euler)")
    parser.add_argument("--n", type=int, default=1, help="space dimension")
    parser.add_argument("--system-file", help="load a system bundle instead")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decaylab",
        description="certify dissipative structure and measure decay rates",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="structural predicates of a system")
    _common_flags(p)
    _system_flags(p)

    p = sub.add_parser("sk-certify",
                       help="kernel condition, spectral gap and compensators")
    _common_flags(p)
    _system_flags(p)

    p = sub.add_parser("spectrum", help="symbol eigenvalues over a radius sweep")
    _common_flags(p)
    _system_flags(p)
    p.add_argument("--r-min", type=float, default=1e-2)
    p.add_argument("--r-max", type=float, default=1e2)
    p.add_argument("--points", type=int, default=81)

    p = sub.add_parser("linear-decay",
                       help="whole-space linear decay rates for radial data")
    _common_flags(p)
    _system_flags(p)
    p.add_argument("--s", type=float, default=0.5, help="data saturation index")
    p.add_argument("--ells", default="0",
                   help="comma-separated derivative orders (default: 0)")
    p.add_argument("--t-min", type=float, default=1.0)
    p.add_argument("--t-max", type=float, default=1e4)
    p.add_argument("--points", type=int, default=25)

    p = sub.add_parser("simulate-euler", help="nonlinear damped Euler run")
    _common_flags(p)
    p.add_argument("--resume", action="store_true",
                   help="re-fit stored snapshots without re-simulating")

    p = sub.add_parser("verify-inequalities",
                       help="block-norm inequality battery on random fields")
    _common_flags(p)

    p = sub.add_parser("report", help="run a batch of experiment configs")
    _common_flags(p)
    p.add_argument("configs", nargs="*", help="experiment TOML files")

    return parser


def _system_table(args) -> dict:
    if args.system_file:
        return {"file": args.system_file}
    return {"model": args.model, "n": args.n}


def _config_for(args) -> dict:
    """Assemble the experiment config from --config plus flag overrides."""
    config = dict(load_config(args.config)) if args.config else {}
    config.setdefault("kind", args.command)
    if args.command in ("validate", "sk-certify", "spectrum", "linear-decay"):
        config.setdefault("system", _system_table(args))
    if args.command == "spectrum":
        config.setdefault("spectrum", {
            "r_min": args.r_min, "r_max": args.r_max, "points": args.points,
        })
    if args.command == "linear-decay":
        n = int(config["system"].get("n", 1))
        config.setdefault("radial", {
            "s": args.s,
            "component": [1.0] + [0.0] * n,
            "ells": [float(x) for x in str(args.ells).split(",") if x],
            "t_min": args.t_min,
            "t_max": args.t_max,
            "points": args.points,
        })
    if args.seed is not None:
        if config.get("kind") == "simulate-euler" and "simulation" in config:
            config["simulation"] = dict(config["simulation"], seed=args.seed)
        inner = dict(config.get("inequalities", {}))
        inner["seed"] = args.seed
        if config.get("kind") == "verify-inequalities":
            config["inequalities"] = inner
    return config


def _print_report(report) -> None:
    print(f"{report.name} [{report.kind}]: "
          f"{'pass' if report.passed else 'FAIL'}")
    for cmp in report.comparisons:
        print("  " + cmp.describe())
    summary = report.out_dir / "summary.json"
    if summary.exists():
        print(f"  bundle: {report.out_dir}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            sys = builtin_system(_system_table(args))
            rep = validate_symmetric_dissipative(sys)
            print(rep.summary())
            return 0 if rep.passed else 1

        if args.command == "report":
            if not args.configs:
                print("report: no experiment configs given", file=_sys.stderr)
                return 2
            reports = run_batch(args.configs, args.out, threads=args.threads,
                                seed=args.seed, keep_partial=args.keep_partial)
            for r in reports:
                _print_report(r)
            return 0 if all(r.passed for r in reports) else 1

        config = _config_for(args)
        if args.command == "simulate-euler" and "simulation" not in config:
            print("simulate-euler: --config with a [simulation] table is "
                  "required", file=_sys.stderr)
            return 2
        out = Path(args.out)
        report = run_experiment(
            config, out, seed=args.seed, keep_partial=args.keep_partial,
            resume=getattr(args, "resume", False),
        )
        if args.command == "sk-certify":
            print(json.dumps(report.details, indent=1))
        else:
            _print_report(report)
        return 0 if report.passed else 1
    except ExperimentError as exc:
        print(f"decaylab: {exc}", file=_sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"decaylab: {exc}", file=_sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
