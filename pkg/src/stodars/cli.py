"""Command-line entry point: solve, verify, bench, profile.

Exit status: 0 on success, 2 on configuration errors (the message names the
offending key), 1 on runtime failures.  STODARS_SEED provides the default
seed when --seed is not given.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import bench as bench_mod
from .configio import (config_from_kv, dump_config, parse_kv,
                       parse_plan_text)
from .diagnostics import run_verification_suite
from .problems import get_instance
from .solver import ConfigError, SolverConfig, run

__all__ = ["main", "build_parser"]


def _default_seed() -> int:
    return int(os.environ.get("STODARS_SEED", "0"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stodars",
        description="stochastic direct search in random subspaces")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run one solver on one instance")
    solve.add_argument("--problem", required=True,
                       help="instance name, e.g. ext_rosenbrock_n8_add_normal")
    solve.add_argument("--config", help="key=value config file")
    solve.add_argument("--seed", type=int, default=None)
    solve.add_argument("--out", default="trace.csv", help="trace CSV path")
    solve.add_argument("--sigma", type=float, default=1e-3)
    solve.add_argument("--dump-config", action="store_true",
                       help="print the effective config and exit")

    verify = sub.add_parser("verify", help="run the verification battery")
    verify.add_argument("--suite", choices=["desk", "large"], default="desk")
    verify.add_argument("--trials", type=int, default=10_000)
    verify.add_argument("--seed", type=int, default=None)
    verify.add_argument("--out", help="also write reports as CSV here")

    benchp = sub.add_parser("bench", help="execute an experiment plan")
    benchp.add_argument("--plan", required=True, help="plan file")
    benchp.add_argument("--parallelism", type=int, default=1)
    benchp.add_argument("--out-dir", required=True)

    profile = sub.add_parser("profile", help="data profiles from traces")
    profile.add_argument("--trace-dir", required=True)
    profile.add_argument("--tolerance", type=float, required=True)
    profile.add_argument("--out", default="profile.csv")
    return parser


def _cmd_solve(args) -> int:
    kv = {}
    if args.config:
        with open(args.config) as fh:
            kv = parse_kv(fh.read())
    config = config_from_kv(kv)
    if args.dump_config:
        sys.stdout.write(dump_config(config))
        return 0
    try:
        problem = get_instance(args.problem, sigma=args.sigma)
    except KeyError as exc:
        raise ConfigError("solve.problem", str(exc)) from None
    seed = args.seed if args.seed is not None else _default_seed()
    config.validate_for_dim(problem.dim)
    trace = run(problem, config, seed, solver_name=config.variant)
    trace.to_csv(args.out)
    print(f"wrote {args.out}: {len(trace) - 1} iterations, "
          f"{trace.evals[-1]} evaluations, final f_true={trace.f_true[-1]:.6g}")
    return 0


def _cmd_verify(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    reports = run_verification_suite(trials=args.trials, seed=seed,
                                     scale="desk" if args.suite == "desk" else "large")
    failed = 0
    for rep in reports:
        print(rep.line())
        failed += rep.verdict == "fail"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("name,trials,empirical,reference,tolerance,verdict\n")
            for r in reports:
                ref = "" if r.reference_value is None else repr(r.reference_value)
                fh.write(f"{r.name},{r.trials},{r.empirical_value!r},{ref},"
                         f"{r.tolerance!r},{r.verdict}\n")
    return 1 if failed else 0


def _cmd_bench(args) -> int:
    with open(args.plan) as fh:
        plan = parse_plan_text(fh.read())
    results, errors = bench_mod.run_plan(plan, parallelism=args.parallelism,
                                         out_dir=args.out_dir)
    print(f"completed {len(results)} runs ({len(errors)} failed) "
          f"-> {args.out_dir}")
    for key, err in sorted(errors.items()):
        print(f"  failed {key}: {err}")
    return 0


def _cmd_profile(args) -> int:
    results, manifest = bench_mod.load_traces(args.trace_dir)
    if not results:
        print("no usable traces found", file=sys.stderr)
        return 1
    stars = bench_mod.compute_f_stars(results)
    grid = bench_mod.default_budget_grid(manifest["budget_multiplier"])
    curves = bench_mod.data_profile(results, stars, args.tolerance, grid)
    bench_mod.write_profiles_csv(curves, args.out)
    print(f"wrote {args.out}")
    for curve in curves:
        print(f"  {curve.solver}: endpoint fraction {curve.endpoint:.3f}")
    return 0


_COMMANDS = {"solve": _cmd_solve, "verify": _cmd_verify, "bench": _cmd_bench,
             "profile": _cmd_profile}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
