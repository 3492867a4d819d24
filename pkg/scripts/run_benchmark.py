#!/usr/bin/env python3
"""Full desk-scale benchmark protocol: every suite instance, the subspace
solvers at p=2 and p=5, the full-space minimal-basis baseline, the p=n
subspace variant, and the 2n-direction variant, across 20 replications.

Writes one trace CSV per run plus a manifest, then data-profile CSVs for
each convergence tolerance.  Expect this to take a while at full scale; cut
--seeds or --multiplier for a smoke run.
"""

import argparse
import os
import sys
import time

from stodars.bench import (ExperimentPlan, compute_f_stars, data_profile,
                           default_budget_grid, run_plan, write_profiles_csv)
from stodars.problems import default_suite
from stodars.solver import SolverConfig


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="bench_out")
    ap.add_argument("--scale", choices=["desk", "paper-like"], default="desk")
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--multiplier", type=int, default=1500)
    ap.add_argument("--nk", type=int, default=4)
    ap.add_argument("--parallelism", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args()

    solvers = [
        ("stodars_p2", SolverConfig(p=2, nk=args.nk)),
        ("stodars_p5", SolverConfig(p=5, nk=args.nk)),
        ("stodars_pn", SolverConfig(p=0, nk=args.nk)),
        ("sdds_minimal", SolverConfig(variant="sdds_minimal", nk=args.nk)),
        ("fullspace_2n", SolverConfig(variant="fullspace_2n", nk=args.nk)),
    ]
    plan = ExperimentPlan(
        problems=default_suite(args.scale),
        solvers=solvers,
        seeds=list(range(args.seeds)),
        budget_multiplier=args.multiplier,
        tolerances=(1e-2, 1e-3),
    )
    total = len(plan.problems) * len(plan.solvers) * len(plan.seeds)
    print(f"{len(plan.problems)} instances x {len(solvers)} solvers x "
          f"{args.seeds} seeds = {total} runs")
    t0 = time.perf_counter()
    results, errors = run_plan(plan, parallelism=args.parallelism,
                               out_dir=args.out_dir)
    print(f"ran {len(results)} ({len(errors)} failed) in "
          f"{time.perf_counter() - t0:.0f} s")

    stars = compute_f_stars(results)
    grid = default_budget_grid(args.multiplier)
    for tol in plan.tolerances:
        curves = data_profile(results, stars, tol, grid)
        path = os.path.join(args.out_dir, f"profiles_tol{tol:g}.csv")
        write_profiles_csv(curves, path)
        print(f"tolerance {tol:g}:")
        for c in curves:
            print(f"  {c.solver:14s} endpoint {c.endpoint:.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
