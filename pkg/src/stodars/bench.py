"""Batch experiment runner and data-profile generation.

A plan is a grid (problems x solvers x seeds); every run gets disjoint
random streams derived from its own key, so results are independent of
scheduling and parallelism.  Profiles report, for each budget expressed in
multiples of (n+1) noisy evaluations, the fraction of problem instances a
solver brought below f* + tol*(f(x0) - f*), where f* is the best true value
any solver found on that instance (true values come from the oracle column
of the traces; the solvers themselves only ever saw noise).
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .problems import NoisyProblem, get_instance
from .solver import RunTrace, SolverConfig, run

__all__ = [
    "ExperimentPlan",
    "ProfileCurve",
    "run_plan",
    "convergence_test",
    "best_found",
    "data_profile",
    "write_profiles_csv",
    "load_traces",
    "MANIFEST_NAME",
]

MANIFEST_NAME = "manifest.json"


@dataclass
class ExperimentPlan:
    problems: list
    solvers: list  # (name, SolverConfig) pairs
    seeds: list
    budget_multiplier: int = 1500
    tolerances: tuple = (1e-2, 1e-3)

    def __post_init__(self):
        if not self.problems or not self.solvers or not self.seeds:
            raise ValueError("plan needs problems, solvers, and seeds")
        if self.budget_multiplier < 1:
            raise ValueError("budget multiplier must be >= 1")
        for tol in self.tolerances:
            if not 0.0 < tol < 1.0:
                raise ValueError("profile tolerances must lie in (0, 1)")

    def budget_for(self, n: int) -> int:
        return self.budget_multiplier * (n + 1)

    def runs(self):
        for prob in self.problems:
            for name, cfg in self.solvers:
                for seed in self.seeds:
                    yield prob, name, cfg, seed


@dataclass
class ProfileCurve:
    solver: str
    tolerance: float
    points: list  # (normalized_budget, fraction_solved)

    def fractions(self) -> np.ndarray:
        return np.array([f for _, f in self.points])

    @property
    def endpoint(self) -> float:
        return self.points[-1][1]


def _trace_filename(problem: str, solver: str, seed: int) -> str:
    return f"{problem}__{solver}__s{seed}.csv"


def _limit_blas_threads():
    # worker processes each run single-threaded BLAS; the pool provides the
    # parallelism
    for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = "1"
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(1)
    except Exception:
        pass


def _run_one(args):
    problem, solver_name, config, seed, budget = args
    cfg = replace(config, budget=budget)
    trace = run(problem, cfg, seed, solver_name=solver_name)
    return (problem.name, solver_name, seed), trace


def run_plan(plan: ExperimentPlan, parallelism: int = 1, out_dir=None):
    """Execute every run of the plan; returns {(problem, solver, seed): trace}.

    Individual run failures are recorded in the manifest and do not abort
    the plan.  Traces are persisted one CSV per run when out_dir is given.
    """
    jobs = []
    for prob, name, cfg, seed in plan.runs():
        jobs.append((prob, name, cfg, seed, plan.budget_for(prob.dim)))

    results = {}
    errors = {}
    if parallelism <= 1:
        _limit_blas_threads()
        for job in jobs:
            key = (job[0].name, job[1], job[3])
            try:
                results[key] = _run_one(job)[1]
            except Exception as exc:  # individual failure, plan continues
                errors[key] = repr(exc)
    else:
        with ProcessPoolExecutor(max_workers=parallelism,
                                 initializer=_limit_blas_threads) as pool:
            futures = {pool.submit(_run_one, job):
                       (job[0].name, job[1], job[3]) for job in jobs}
            for fut, key in futures.items():
                try:
                    results[key] = fut.result()[1]
                except Exception as exc:
                    errors[key] = repr(exc)

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        manifest = {
            "budget_multiplier": plan.budget_multiplier,
            "tolerances": list(plan.tolerances),
            "seeds": list(plan.seeds),
            "solvers": [name for name, _ in plan.solvers],
            "runs": [],
        }
        for (pname, sname, seed), trace in sorted(results.items()):
            fname = _trace_filename(pname, sname, seed)
            trace.to_csv(os.path.join(out_dir, fname))
            manifest["runs"].append({
                "problem": pname, "solver": sname, "seed": seed,
                "n": trace.n, "file": fname, "status": "ok",
            })
        for (pname, sname, seed), err in sorted(errors.items()):
            manifest["runs"].append({
                "problem": pname, "solver": sname, "seed": seed,
                "n": None, "file": None, "status": f"error: {err}",
            })
        with open(os.path.join(out_dir, MANIFEST_NAME), "w") as fh:
            json.dump(manifest, fh, indent=1, sort_keys=True)
    return results, errors


def load_traces(trace_dir):
    """Read back a persisted plan: {(problem, solver, seed): trace}."""
    with open(os.path.join(trace_dir, MANIFEST_NAME)) as fh:
        manifest = json.load(fh)
    results = {}
    for entry in manifest["runs"]:
        if entry["status"] != "ok":
            continue
        trace = RunTrace.from_csv(os.path.join(trace_dir, entry["file"]),
                                  problem=entry["problem"],
                                  solver=entry["solver"],
                                  seed=entry["seed"], n=entry["n"])
        results[(entry["problem"], entry["solver"], entry["seed"])] = trace
    return results, manifest


# ---------------------------------------------------------------------------
# profile computation

def convergence_test(trace: RunTrace, f_star: float, f0: float,
                     tau_profile: float):
    """Earliest cumulative evaluation count from which the best true value
    seen so far satisfies f <= f* + tau*(f0 - f*); None if never."""
    threshold = f_star + tau_profile * (f0 - f_star)
    best = math.inf
    for f, ev in zip(trace.f_true, trace.evals):
        best = min(best, f)
        if best <= threshold:
            return ev
    return None


def best_found(traces) -> float:
    """Least true value any run in the group visited (all incumbents count)."""
    traces = list(traces)
    if not traces:
        raise ValueError("empty trace group")
    return min(min(t.f_true) for t in traces)


def _instance_key(problem: str, seed: int):
    # f* groups: one per (problem instance, seed), shared across solvers
    return (problem, seed)


def compute_f_stars(results) -> dict:
    groups = {}
    for (pname, _sname, seed), trace in results.items():
        groups.setdefault(_instance_key(pname, seed), []).append(trace)
    return {key: best_found(ts) for key, ts in groups.items()}


def data_profile(results, f_stars, tau_profile: float, budgets) -> list[ProfileCurve]:
    """One curve per solver: fraction of instances solved within each
    normalized budget (noisy evaluations per n+1)."""
    budgets = list(budgets)
    solvers = sorted({s for (_, s, _) in results})
    curves = []
    for solver in solvers:
        solved_at = []
        for (pname, sname, seed), trace in results.items():
            if sname != solver:
                continue
            f_star = f_stars[_instance_key(pname, seed)]
            f0 = trace.f_true[0]
            ev = convergence_test(trace, f_star, f0, tau_profile)
            solved_at.append(math.inf if ev is None else ev / (trace.n + 1))
        solved_at = np.array(solved_at)
        total = len(solved_at)
        points = [(b, float(np.count_nonzero(solved_at <= b)) / total)
                  for b in budgets]
        curves.append(ProfileCurve(solver=solver, tolerance=tau_profile,
                                   points=points))
    return curves


def default_budget_grid(multiplier: int, step: int = 5):
    return list(range(step, multiplier + 1, step)) + (
        [] if multiplier % step == 0 else [multiplier])


def write_profiles_csv(curves, path) -> None:
    with open(path, "w") as fh:
        fh.write("solver,normalized_budget,fraction\n")
        for curve in curves:
            for b, frac in curve.points:
                fh.write(f"{curve.solver},{b!r},{frac!r}\n")


def read_profiles_csv(path) -> list[ProfileCurve]:
    rows = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "solver,normalized_budget,fraction":
            raise ValueError(f"unexpected profile header in {path}")
        for line in fh:
            solver, b, frac = line.rstrip("\n").split(",")
            rows.setdefault(solver, []).append((float(b), float(frac)))
    return [ProfileCurve(solver=s, tolerance=math.nan, points=pts)
            for s, pts in sorted(rows.items())]
