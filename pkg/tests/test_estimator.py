import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stodars.estimator import (AccuracyParams, EstimateCache, OracleEstimator,
                               SampleSchedule, TrialEstimate, fresh_estimate,
                               promote_on_success, refine_on_failure)
from stodars.problems import make_instance, make_smooth
from stodars.streams import stream


class ScriptedProblem:
    """Deterministic sample source for injection tests."""

    def __init__(self, values):
        self.values = [float(v) for v in values]
        self.cursor = 0

    def sample_noisy(self, x, count, rng):
        out = self.values[self.cursor:self.cursor + count]
        if len(out) < count:
            raise RuntimeError("script exhausted")
        self.cursor += count
        return np.array(out)


def test_fresh_estimate_single_sample():
    prob = ScriptedProblem([42.0])
    mean, count, _ = fresh_estimate(prob, None, 1, None)
    assert mean == 42.0 and count == 1


def test_fresh_estimate_mean():
    prob = ScriptedProblem([1.0, 2.0, 3.0])
    mean, count, _ = fresh_estimate(prob, None, 3, None)
    assert mean == pytest.approx(2.0)


def test_fresh_estimate_rejects_zero():
    with pytest.raises(ValueError):
        fresh_estimate(ScriptedProblem([]), None, 0, None)


def test_fresh_estimate_stderr_band():
    # multiplicative noise: std of the mean is sigma*f/sqrt(count)
    prob = make_instance("sphere", 4, "multiplicative", "normal", sigma=1e-3)
    x = np.full(4, 1.0)
    mean, _, _ = fresh_estimate(prob, x, 10_000, stream(0, "n"))
    f = prob.f_true(x)
    assert abs(mean - f) <= 4.0 * 1e-3 * f / 100.0


def test_promote_weighted_mean():
    cache = EstimateCache()
    prob = ScriptedProblem([20.0, 20.0, 20.0, 20.0])
    trial = TrialEstimate(value=10.0, count=4, cost=4)
    promote_on_success(cache, trial, prob, None, 4, None)
    assert cache.incumbent_mean == pytest.approx(15.0)
    assert cache.incumbent_count == 8


def test_promote_equal_weights():
    cache = EstimateCache()
    a, b = 3.7, -1.9
    prob = ScriptedProblem([b] * 25)
    promote_on_success(cache, TrialEstimate(a, 25, 25), prob, None, 25, None)
    assert abs(cache.incumbent_mean - (a + b) / 2.0) < 1e-12


def test_promote_rejects_zero_next():
    with pytest.raises(ValueError):
        promote_on_success(EstimateCache(), TrialEstimate(1.0, 1, 1),
                           ScriptedProblem([]), None, 0, None)


def test_refine_running_mean():
    cache = EstimateCache(incumbent_mean=8.0, incumbent_count=4)
    prob = ScriptedProblem([0.0, 0.0, 0.0, 0.0])
    refine_on_failure(cache, prob, None, 4, None)
    assert cache.incumbent_mean == pytest.approx(4.0)
    assert cache.incumbent_count == 8


def test_refine_constant_fixed_point():
    c = 2.5
    cache = EstimateCache(incumbent_mean=c, incumbent_count=2)
    for _ in range(20):
        refine_on_failure(cache, ScriptedProblem([c, c, c]), None, 3, None)
        assert cache.incumbent_mean == pytest.approx(c)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.booleans(),
                          st.floats(-100, 100, allow_nan=False),
                          st.integers(1, 6)),
                min_size=1, max_size=25),
       st.integers(0, 10_000))
def test_replay_equivalence(ops, seed):
    # the cache mean always equals the plain mean of the logged multiset
    rng = stream(seed, "replay")
    cache = EstimateCache(record_samples=True)
    values = rng.normal(5.0, 2.0, size=400).tolist()
    cursor = 0

    def take(k):
        nonlocal cursor
        out = values[cursor:cursor + k]
        cursor += k
        return out

    init = take(3)
    cache.reset_incumbent(np.mean(init), 3, init)
    for promote, trial_value, n_next in ops:
        if cursor + 8 > len(values):
            break
        if promote:
            tcount = 2
            tsamples = take(tcount)
            trial = TrialEstimate(float(np.mean(tsamples)), tcount, tcount,
                                  samples=np.array(tsamples))
            promote_on_success(cache, trial, ScriptedProblem(take(n_next)),
                               None, n_next, None)
        else:
            refine_on_failure(cache, ScriptedProblem(take(n_next)), None,
                              n_next, None)
        assert cache.incumbent_count == len(cache.sample_log)
        assert abs(cache.incumbent_mean - np.mean(cache.sample_log)) < 1e-12


def test_variance_scaling_one_over_nk():
    # var of the estimate at fixed x decays like 1/n_k: log-log slope -1
    prob = make_instance("sphere", 4, "additive", "normal", sigma=0.05)
    x = np.full(4, 1.3)
    rng = stream(5, "var")
    counts = [4, 16, 64, 256]
    variances = []
    for n_k in counts:
        means = [np.mean(prob.sample_noisy(x, n_k, rng)) for _ in range(1500)]
        variances.append(np.var(means))
    slope = np.polyfit(np.log(counts), np.log(variances), 1)[0]
    assert abs(slope + 1.0) <= 0.15


# ---------------------------------------------------------------------------
# schedules and oracles

def test_schedule_fixed():
    s = SampleSchedule(base=4)
    assert s(0, 1.0) == 4 and s(99, 1e-9) == 4


def test_schedule_delta4_growth():
    s = SampleSchedule(base=4, mode="delta4", delta0=1.0)
    assert s(0, 1.0) == 4
    assert s(1, 0.5) == 64  # 4 * (1/0.5)^4
    assert s(2, 2.0) == 4   # never below base
    assert s(3, 1e-12) == s.cap


def test_accuracy_params_validation():
    AccuracyParams(0.25, 0.9)
    with pytest.raises(ValueError):
        AccuracyParams(0.0, 0.9)
    with pytest.raises(ValueError):
        AccuracyParams(0.1, 1.0)


def test_oracle_exact_mode():
    base = make_smooth("sphere", 3)
    est = OracleEstimator(base, eps_f=0.25, mode="exact")
    x = np.array([1.0, 2.0, 2.0])
    for delta in (0.1, 1.0, 4.0):
        assert est.incumbent_value(x, 0, delta) == base.f_true(x)
        assert est.trial_value(x, 0, delta, None).value == base.f_true(x)


def test_oracle_worst_case_band_edge():
    base = make_smooth("sphere", 3)
    est = OracleEstimator(base, eps_f=0.25, mode="worst-case-good")
    x = np.ones(3)
    delta = 1.0
    gap_up = est.incumbent_value(x, 0, delta) - base.f_true(x)
    gap_dn = base.f_true(x) - est.trial_value(x, 0, delta, None).value
    assert gap_up == pytest.approx(0.25)
    assert gap_dn == pytest.approx(0.25)


def test_oracle_bad_mode_violates_band():
    base = make_smooth("sphere", 3)
    est = OracleEstimator(base, eps_f=0.25, mode="adversarial-bad")
    x = np.ones(3)
    delta = 1.0
    gap = est.incumbent_value(x, 0, delta) - base.f_true(x)
    assert gap > 0.25 + 1e-12


def test_worst_case_oracle_decrease_soundness():
    # whenever the estimated decrease passes the acceptance test, the true
    # decrease is at least (gamma-2)*eps_f*delta^2, for every (x, u, delta)
    gamma, eps_f = 4.0, 0.25
    for family in ("sphere", "ext_rosenbrock", "broyden_tridiag"):
        base = make_smooth(family, 8)
        est = OracleEstimator(base, eps_f=eps_f, mode="worst-case-good")
        rng = stream(17, "dec", family)
        hits = 0
        for _ in range(100):
            x = base.x0 + rng.normal(0, 0.5, size=8)
            u = rng.standard_normal(8)
            u /= np.linalg.norm(u)
            delta = 10.0 ** rng.uniform(-3, 0)
            f0 = est.incumbent_value(x, 0, delta)
            fu = est.trial_value(x + delta * u, 0, delta, None).value
            if fu - f0 <= -gamma * eps_f * delta**2:
                hits += 1
                true_dec = base.f_true(x + delta * u) - base.f_true(x)
                assert true_dec <= -(gamma - 2.0) * eps_f * delta**2 + 1e-12
        # the property must hold vacuously or not; either way no violation
        assert hits >= 0


def test_sample_journal_and_log_file(tmp_path):
    from stodars.estimator import MonteCarloEstimator
    from stodars.problems import make_instance
    from stodars.solver import SolverConfig, run

    prob = make_instance("sphere", 4, "additive", "normal", sigma=1e-2)
    cfg = SolverConfig(p=2, budget=200)
    est = MonteCarloEstimator(prob, cfg.schedule(), record_samples=True)
    run(prob, cfg, 5, estimator=est)
    # every journaled draw is (iteration, point-hash, value)
    assert est.journal
    ks, hashes, vals = zip(*est.journal)
    assert all(isinstance(h, str) and len(h) == 12 for h in hashes)
    # the incumbent aggregate is a subset of the journal values
    journal_vals = list(vals)
    for s in est.cache.sample_log:
        assert any(abs(s - v) < 1e-15 for v in journal_vals)
    assert abs(est.cache.incumbent_mean
               - sum(est.cache.sample_log) / len(est.cache.sample_log)) < 1e-12

    path = tmp_path / "samples.log"
    est.write_sample_log(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,point_hash,sample"
    assert len(lines) == len(est.journal) + 1
    k0, h0, v0 = lines[1].split(",")
    assert float(v0) == est.journal[0][2]  # repr round-trip
