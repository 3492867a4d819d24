import math

import numpy as np
import pytest

from stodars.diagnostics import (check_acute_angle, check_haar_moments,
                                 check_jlt, check_sphere_uniformity, mc_error,
                                 supermartingale_trace)
from stodars.estimator import OracleEstimator
from stodars.problems import make_instance
from stodars.solver import SolverConfig, run
from stodars.streams import stream


def test_jlt_full_space_is_certain():
    reports = check_jlt(20, [20], eps_q=0.3, trials=1000, seed=0)
    assert reports[0].empirical_value == 1.0
    assert reports[0].verdict == "pass"


def test_jlt_monotone_in_p():
    reports = check_jlt(50, [5, 20, 50], eps_q=0.5, trials=2000, seed=1)
    probs = [r.empirical_value for r in reports]
    errs = [mc_error(p, 2000) for p in probs]
    for i in range(1, len(probs)):
        assert probs[i] >= probs[i - 1] - 2 * (errs[i] + errs[i - 1])
    assert all(r.verdict == "pass" for r in reports)


def test_jlt_band_nesting():
    wide = check_jlt(30, [5], eps_q=0.999, trials=2000, seed=2)[0]
    narrow = check_jlt(30, [5], eps_q=0.5, trials=2000, seed=2)[0]
    assert wide.empirical_value >= narrow.empirical_value


def test_jlt_validates_inputs():
    with pytest.raises(ValueError):
        check_jlt(10, [11], 0.5, 2000, 0)
    with pytest.raises(ValueError):
        check_jlt(10, [5], 0.5, 10, 0)


def test_acute_angle_dominates_alignment():
    rep = check_acute_angle(50, 10, trials=2000, seed=3, alpha_q=0.1)
    assert rep.verdict == "pass"
    assert rep.empirical_value >= rep.reference_value - rep.tolerance


def test_acute_angle_full_space():
    rep = check_acute_angle(8, 8, trials=500, seed=4, alpha_q=0.1)
    assert rep.verdict == "pass"
    assert rep.empirical_value == 1.0


def test_acute_angle_alpha_range():
    with pytest.raises(ValueError):
        check_acute_angle(10, 2, 100, 0, alpha_q=0.7)


def test_haar_moments_small_and_large():
    rep2 = check_haar_moments(2, 100_000, seed=5)
    assert rep2.verdict == "pass"
    assert abs(rep2.empirical_value - 0.5) <= rep2.tolerance
    rep10 = check_haar_moments(10, 50_000, seed=6)
    assert rep10.verdict == "pass"


def test_sphere_uniformity():
    rep = check_sphere_uniformity(10, 3, trials=100_000, seed=7)
    assert rep.verdict == "pass"
    assert abs(rep.empirical_value - 0.1) <= rep.tolerance


def test_sphere_uniformity_p1():
    rep = check_sphere_uniformity(6, 1, trials=20_000, seed=8)
    assert rep.verdict == "pass"


def test_supermartingale_constant_failure_geometry():
    # force every iteration to fail: estimates are constant, so no trial can
    # show a decrease; delta decays geometrically and sum(delta^2) stays
    # below delta0^2/(1-tau^2)
    prob = make_instance("sphere", 4, "additive", "normal", sigma=1e-3)
    cfg = SolverConfig(p=2, budget=600)

    class ConstantEstimator(OracleEstimator):
        def incumbent_value(self, x, k, delta):
            return 1.0

        def trial_value(self, x, k, delta, rng):
            t = super().trial_value(x, k, delta, rng)
            t.value = 1.0
            return t

    est = ConstantEstimator(prob, eps_f=0.25, mode="exact")
    trace = run(prob, cfg, 0, estimator=est)
    assert all(o == "F" for o in trace.outcome[1:])
    tau, delta0 = cfg.tau, cfg.delta0
    expect = [delta0 * tau**k for k in range(len(trace.delta))]
    np.testing.assert_allclose(trace.delta, expect, rtol=1e-12)
    phi, sum_d2, monotone = supermartingale_trace(trace, nu=0.5, eps_f=0.25,
                                                  f_min=0.0)
    assert sum_d2 <= delta0**2 / (1 - tau**2) + 1e-9
    assert np.all(phi > 0)


def test_supermartingale_positive_everywhere():
    prob = make_instance("ext_rosenbrock", 8, "additive", "normal")
    trace = run(prob, SolverConfig(p=2, budget=2000), 1)
    phi, _, _ = supermartingale_trace(trace, nu=0.3, eps_f=0.25, f_min=0.0)
    assert np.all(phi > 0)


def test_supermartingale_trend_on_quadratic():
    # informational trend: final windowed median below the initial one in
    # at least 18 of 20 seeds
    prob = make_instance("sphere", 8, "multiplicative", "normal", sigma=1e-3)
    cfg = SolverConfig(p=2, budget=4000)
    wins = 0
    for seed in range(20):
        trace = run(prob, cfg, seed)
        phi, _, _ = supermartingale_trace(trace, nu=0.5, eps_f=cfg.eps_f,
                                          f_min=0.0)
        w = min(50, max(2, len(phi) // 4))
        if np.median(phi[-w:]) < np.median(phi[:w]):
            wins += 1
    assert wins >= 18


def test_diagnostics_deterministic():
    a = check_haar_moments(5, 20_000, seed=9)
    b = check_haar_moments(5, 20_000, seed=9)
    assert a.empirical_value == b.empirical_value
    ra = check_jlt(20, [4, 20], 0.5, 1000, seed=10)
    rb = check_jlt(20, [4, 20], 0.5, 1000, seed=10)
    assert [r.empirical_value for r in ra] == [r.empirical_value for r in rb]


def test_haar_batch_pipeline_matches_production_sampler():
    # the chunked pipeline behind the moment check consumes the stream and
    # applies QR exactly like repeated production draws would
    from stodars.diagnostics import _haar_u11_batch
    from stodars.geometry import sample_haar_orthogonal

    for n in (3, 17):
        rng_batch = stream(42, "equiv", n)
        batch = _haar_u11_batch(n, 6, rng_batch)
        rng_seq = stream(42, "equiv", n)
        seq = [sample_haar_orthogonal(n, rng_seq).matrix[0, 0]
               for _ in range(6)]
        np.testing.assert_array_equal(batch, seq)


def test_acute_angle_degenerate_injection_is_informational():
    from stodars.geometry import DirectionSet

    def degenerate(rng):
        return DirectionSet(np.array([[1.0, 0.0], [-1.0, 0.0]]))

    rep = check_acute_angle(10, 2, trials=50, seed=11,
                            pss_provider=degenerate)
    assert rep.verdict == "informational"
    assert "skipped" in rep.detail
