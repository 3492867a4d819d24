import math

import numpy as np
import pytest

from stodars.bench import (ExperimentPlan, ProfileCurve, best_found,
                           compute_f_stars, convergence_test, data_profile,
                           default_budget_grid, load_traces, read_profiles_csv,
                           run_plan, write_profiles_csv)
from stodars.problems import make_instance
from stodars.solver import RunTrace, SolverConfig


def tiny_plan(seeds=(0, 1, 2), multiplier=30):
    problems = [make_instance("sphere", 4, "additive", "normal", sigma=1e-3),
                make_instance("ext_rosenbrock", 4, "additive", "normal",
                              sigma=1e-3)]
    solvers = [("subspace_p2", SolverConfig(p=2)),
               ("fullspace", SolverConfig(variant="sdds_minimal"))]
    return ExperimentPlan(problems=problems, solvers=solvers,
                          seeds=list(seeds), budget_multiplier=multiplier)


def synthetic_trace(f_values, evals, n=4):
    tr = RunTrace(problem="p", solver="s", seed=0, n=n)
    for i, (f, ev) in enumerate(zip(f_values, evals)):
        tr.append(i, "start" if i == 0 else "F", 1.0, i, i, f, f, ev)
    return tr


def test_plan_validation():
    with pytest.raises(ValueError):
        ExperimentPlan(problems=[], solvers=[("a", SolverConfig())], seeds=[0])
    with pytest.raises(ValueError):
        tiny_plan(multiplier=0)
    with pytest.raises(ValueError):
        ExperimentPlan(problems=[make_instance("sphere", 4, "additive", "normal")],
                       solvers=[("a", SolverConfig())], seeds=[0],
                       tolerances=(1.5,))


def test_run_plan_counts_and_determinism(tmp_path):
    plan = tiny_plan()
    res1, err1 = run_plan(plan, parallelism=1, out_dir=tmp_path / "a")
    assert len(res1) == 2 * 2 * 3  # problems x solvers x seeds
    assert not err1
    res2, _ = run_plan(plan, parallelism=1)
    for key in res1:
        assert res1[key].f_true == res2[key].f_true
        assert res1[key].evals == res2[key].evals


def test_run_plan_parallel_identical(tmp_path):
    plan = tiny_plan(seeds=(0, 1))
    r1, _ = run_plan(plan, parallelism=1, out_dir=tmp_path / "serial")
    r8, _ = run_plan(plan, parallelism=8, out_dir=tmp_path / "par")
    assert set(r1) == set(r8)
    for key in r1:
        assert r1[key].f_true == r8[key].f_true
        assert r1[key].delta == r8[key].delta
        assert r1[key].evals == r8[key].evals
    # identical bytes on disk
    for f in sorted((tmp_path / "serial").glob("*.csv")):
        a = f.read_bytes()
        b = (tmp_path / "par" / f.name).read_bytes()
        assert a == b, f.name


def test_run_plan_records_failures():
    bad = make_instance("sphere", 4, "additive", "normal")
    bad.base.feasible = lambda x: False  # infeasible start -> run error
    good = make_instance("sphere", 4, "multiplicative", "normal")
    plan = ExperimentPlan(problems=[bad, good],
                          solvers=[("s", SolverConfig(p=2))], seeds=[0],
                          budget_multiplier=20)
    results, errors = run_plan(plan, parallelism=1)
    assert len(results) == 1
    assert len(errors) == 1


def test_trace_persistence_round_trip(tmp_path):
    plan = tiny_plan(seeds=(0,))
    res, _ = run_plan(plan, parallelism=1, out_dir=tmp_path)
    loaded, manifest = load_traces(tmp_path)
    assert set(loaded) == set(res)
    for key in res:
        assert loaded[key].f_true == res[key].f_true
        assert loaded[key].evals == res[key].evals
    assert manifest["budget_multiplier"] == 30


# ---------------------------------------------------------------------------
# convergence test and f*

def test_convergence_test_boundary_tau_one():
    tr = synthetic_trace([10.0, 9.0], [0, 5])
    assert convergence_test(tr, f_star=0.0, f0=10.0, tau_profile=1.0) == 0


def test_convergence_test_never_improving():
    tr = synthetic_trace([10.0, 10.0, 10.0], [0, 5, 9])
    assert convergence_test(tr, 0.0, 10.0, 1e-3) is None


def test_convergence_test_direct_lookup():
    tr = synthetic_trace([10.0, 5.0, 0.05, 0.01], [0, 100, 500, 900])
    # threshold = 0 + 1e-2 * 10 = 0.1, first reached at evals=500
    assert convergence_test(tr, 0.0, 10.0, 1e-2) == 500


def test_convergence_test_uses_running_best():
    # non-monotone trace: once seen, a good value keeps counting
    tr = synthetic_trace([10.0, 0.05, 7.0], [0, 100, 200])
    assert convergence_test(tr, 0.0, 10.0, 1e-2) == 100


def test_best_found_single_and_group():
    a = synthetic_trace([10.0, 1e-9], [0, 10])
    assert best_found([a]) == 1e-9
    b = synthetic_trace([10.0, 0.5], [0, 10])
    assert best_found([a, b]) == 1e-9
    with pytest.raises(ValueError):
        best_found([])


def test_f_star_groups_keyed_per_instance_and_seed():
    t1 = RunTrace(problem="p1", solver="a", seed=0, n=4)
    t1.append(0, "start", 1.0, 0, 0, 5.0, 5.0, 0)
    t2 = RunTrace(problem="p1", solver="b", seed=0, n=4)
    t2.append(0, "start", 1.0, 0, 0, 3.0, 3.0, 0)
    t3 = RunTrace(problem="p1", solver="a", seed=1, n=4)
    t3.append(0, "start", 1.0, 0, 0, 1.0, 1.0, 0)
    stars = compute_f_stars({("p1", "a", 0): t1, ("p1", "b", 0): t2,
                             ("p1", "a", 1): t3})
    assert stars[("p1", 0)] == 3.0  # best across solvers, same seed
    assert stars[("p1", 1)] == 1.0  # separate group per seed


# ---------------------------------------------------------------------------
# profiles

def test_profile_all_solved_at_zero():
    tr = synthetic_trace([10.0], [0])
    results = {("p", "s", 0): tr}
    curves = data_profile(results, {("p", 0): 0.0}, tau_profile=1.0,
                          budgets=[1, 2, 3])
    assert curves[0].fractions().tolist() == [1.0, 1.0, 1.0]


def test_profile_none_solved():
    tr = synthetic_trace([10.0, 10.0], [0, 5])
    curves = data_profile({("p", "s", 0): tr}, {("p", 0): 0.0},
                          tau_profile=1e-3, budgets=[1, 2])
    assert curves[0].fractions().tolist() == [0.0, 0.0]


def test_profile_monotone_and_bounded():
    plan = tiny_plan()
    results, _ = run_plan(plan, parallelism=1)
    stars = compute_f_stars(results)
    grid = default_budget_grid(plan.budget_multiplier)
    for tol in plan.tolerances:
        for curve in data_profile(results, stars, tol, grid):
            fr = curve.fractions()
            assert np.all(np.diff(fr) >= 0)
            assert fr.min() >= 0.0 and fr.max() <= 1.0
            # values are multiples of 1/instances
            counts = fr * (len(plan.problems) * len(plan.seeds))
            np.testing.assert_allclose(counts, np.round(counts), atol=1e-9)


def test_profile_dominance_is_preserved():
    fast = synthetic_trace([10.0, 0.0], [0, 10])
    slow = synthetic_trace([10.0, 0.0], [0, 50])
    results = {("p", "A", 0): fast, ("p", "B", 0): slow}
    curves = {c.solver: c for c in data_profile(
        results, {("p", 0): 0.0}, 1e-2, budgets=[1, 2, 5, 10, 20])}
    assert np.all(curves["A"].fractions() >= curves["B"].fractions())


def test_profile_csv_round_trip_and_recompute(tmp_path):
    plan = tiny_plan(seeds=(0, 1))
    results, _ = run_plan(plan, parallelism=1, out_dir=tmp_path / "traces")
    stars = compute_f_stars(results)
    grid = default_budget_grid(plan.budget_multiplier)
    curves = data_profile(results, stars, 1e-2, grid)
    write_profiles_csv(curves, tmp_path / "prof.csv")

    # recompute from the persisted traces: must be bit-identical
    loaded, _ = load_traces(tmp_path / "traces")
    stars2 = compute_f_stars(loaded)
    curves2 = data_profile(loaded, stars2, 1e-2, grid)
    write_profiles_csv(curves2, tmp_path / "prof2.csv")
    assert (tmp_path / "prof.csv").read_bytes() == (tmp_path / "prof2.csv").read_bytes()

    back = read_profiles_csv(tmp_path / "prof.csv")
    assert [c.solver for c in back] == sorted(c.solver for c in curves)
    for c_in, c_out in zip(sorted(curves, key=lambda c: c.solver), back):
        assert c_out.points == c_in.points
