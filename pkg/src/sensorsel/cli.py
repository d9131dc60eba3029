"""Command-line front end: ``select {dynamic,robust,verify,gen-scene}``.

Worker count for the suites comes from ``--workers`` or the SELECT_WORKERS
environment variable (default 1); parallel runs produce byte-identical
output because every record draws from its own derived seed stream.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import ConfigError, load_config, run_dynamic_suite, run_robust_suite, verify
from .scene import random_scene, scene_to_dict


def _add_suite_args(sub):
    sub.add_argument("--config", required=True, help="scenario JSON file")
    sub.add_argument("--out", required=True, help="output CSV path")
    sub.add_argument("--workers", type=int, default=None, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="select", description="Sensor-selection experiment runner"
    )
    subs = parser.add_subparsers(dest="command", required=True)
    _add_suite_args(subs.add_parser("dynamic", help="run the dynamic-selection suite"))
    _add_suite_args(subs.add_parser("robust", help="run the robust-selection suite"))
    ver = subs.add_parser("verify", help="re-check a results CSV")
    ver.add_argument("csv", help="results CSV produced by a suite run")
    ver.add_argument("--tol", type=float, default=1e-9, help="relative tolerance")
    gen = subs.add_parser("gen-scene", help="generate a scene JSON file")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--m-max", type=int, default=14)
    gen.add_argument("--d-s", type=float, default=4.0)
    gen.add_argument("--d-max", type=float, default=14.0)
    gen.add_argument("--g", type=int, default=152)
    gen.add_argument("--mode", choices=["uniform", "even"], default="uniform")
    gen.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("dynamic", "robust"):
            config = load_config(args.config, args.command)
            runner = run_dynamic_suite if args.command == "dynamic" else run_robust_suite
            rows = runner(config, args.out, workers=args.workers)
            errors = [r for r in rows if r["error"]]
            print(f"{len(rows)} records -> {args.out} ({len(errors)} errors)")
            for row in errors:
                print(f"  experiment {row['experiment']} {row['algorithm']}: {row['error']}")
            return 1 if errors else 0
        if args.command == "verify":
            report = verify(args.csv, tol=args.tol)
            if report.ok:
                print(f"verify: {report.n_checked}/{report.n_rows} rows re-checked clean")
                return 0
            print(f"verify: {len(report.failures)} mismatches")
            for failure in report.failures:
                print(
                    f"  row {failure['row']}: stored {failure['stored']!r} "
                    f"recomputed {failure['recomputed']!r} rel_err {failure['rel_err']:.3e}"
                )
            return 1
        if args.command == "gen-scene":
            scene = random_scene(
                seed=args.seed,
                m_max=args.m_max,
                d_s=args.d_s,
                d_max=args.d_max,
                g=args.g,
                mode=args.mode,
            )
            with open(args.out, "w", encoding="utf-8") as fh:
                json.dump(scene_to_dict(scene), fh, indent=2, sort_keys=True)
                fh.write("\n")
            print(f"scene with {args.m_max} sensors, {args.g} targets -> {args.out}")
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
