"""Monte-Carlo function estimates with sample reuse, plus accuracy oracles.

The running incumbent estimate aggregates every noisy sample ever drawn at
the current incumbent.  When a trial point is accepted its n_k trial samples
are kept and topped up with n_{k+1} fresh draws, so the new incumbent count
is pi = n_k + n_{k+1}; when the iteration fails, n_{k+1} fresh draws at the
unchanged incumbent extend the running mean to pi = pi_old + n_{k+1}.
Trial estimates are always fresh.

The oracle estimators replace sampling with exact values, values pushed to
the edge of the stepsize-squared accuracy band (worst case that still
satisfies the band), or values violating the band, for property tests of
the acceptance rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AccuracyParams",
    "EstimateCache",
    "TrialEstimate",
    "fresh_estimate",
    "promote_on_success",
    "refine_on_failure",
    "SampleSchedule",
    "MonteCarloEstimator",
    "OracleEstimator",
    "oracle_estimator",
]


@dataclass(frozen=True)
class AccuracyParams:
    eps_f: float
    beta_f: float

    def __post_init__(self):
        if not self.eps_f > 0:
            raise ValueError("eps_f must be positive")
        if not 0.0 < self.beta_f < 1.0:
            raise ValueError("beta_f must lie in (0, 1)")


@dataclass
class TrialEstimate:
    """One trial-point estimate: its mean, sample count, and eval cost."""

    value: float
    count: int
    cost: int
    samples: np.ndarray | None = None


@dataclass
class EstimateCache:
    """Running incumbent estimate plus bookkeeping for sample replay.

    When `record_samples` is set, every sample aggregated into the incumbent
    mean is also kept in `sample_log`, so tests can recompute the exact mean
    from the raw multiset.
    """

    incumbent_mean: float = 0.0
    incumbent_count: int = 0
    record_samples: bool = False
    sample_log: list = field(default_factory=list)

    def reset_incumbent(self, mean: float, count: int, samples=None):
        self.incumbent_mean = float(mean)
        self.incumbent_count = int(count)
        if self.record_samples:
            self.sample_log = list(samples)


def fresh_estimate(problem, x, count: int, rng: np.random.Generator):
    """Arithmetic mean of `count` fresh noisy samples at x."""
    if count < 1:
        raise ValueError("estimate needs at least one sample")
    samples = problem.sample_noisy(x, count, rng)
    return float(np.mean(samples)), count, samples


def promote_on_success(cache: EstimateCache, trial: TrialEstimate,
                       problem, x_new, n_next: int, rng: np.random.Generator) -> int:
    """Trial becomes incumbent: reuse its samples, add n_next fresh ones."""
    if n_next < 1:
        raise ValueError("sample schedule must return at least 1")
    fresh = problem.sample_noisy(x_new, n_next, rng)
    pi = trial.count + n_next
    cache.incumbent_mean = (trial.count * trial.value + float(fresh.sum())) / pi
    cache.incumbent_count = pi
    if cache.record_samples:
        kept = list(trial.samples) if trial.samples is not None \
            else [trial.value] * trial.count
        cache.sample_log = kept + list(fresh)
    return n_next


def refine_on_failure(cache: EstimateCache, problem, x, n_next: int,
                      rng: np.random.Generator) -> int:
    """Incumbent unchanged: extend its running mean with n_next fresh draws."""
    if n_next < 1:
        raise ValueError("sample schedule must return at least 1")
    fresh = problem.sample_noisy(x, n_next, rng)
    pi = cache.incumbent_count + n_next
    cache.incumbent_mean = (cache.incumbent_count * cache.incumbent_mean
                            + float(fresh.sum())) / pi
    cache.incumbent_count = pi
    if cache.record_samples:
        cache.sample_log.extend(fresh)
    return n_next


# ---------------------------------------------------------------------------
# sample-count schedules

@dataclass(frozen=True)
class SampleSchedule:
    """Per-iteration sample counts n_k.

    mode "fixed" returns `base` always; mode "delta4" scales like
    (delta0/delta)^4, the theoretical rate, capped to keep budgets finite.
    """

    base: int = 4
    mode: str = "fixed"
    delta0: float = 1.0
    cap: int = 100_000

    def __call__(self, k: int, delta: float) -> int:
        if self.mode == "fixed":
            return self.base
        if self.mode == "delta4":
            ratio = self.delta0 / max(delta, 1e-12)
            return min(self.cap, max(self.base, int(np.ceil(self.base * ratio**4))))
        raise ValueError(f"unknown schedule mode {self.mode!r}")


# ---------------------------------------------------------------------------
# estimator drivers used by the solver loop

def point_hash(x) -> str:
    """Short stable identifier for an evaluation point."""
    import hashlib

    return hashlib.sha1(np.ascontiguousarray(x, dtype=float).tobytes()).hexdigest()[:12]


class MonteCarloEstimator:
    """Sampling estimator with incumbent reuse; the production path.

    With `record_samples` every noisy draw is journaled as
    (iteration, point hash, value), and the samples currently aggregated
    into the incumbent mean are kept for replay checks; the journal can be
    persisted as line-oriented text via write_sample_log.
    """

    def __init__(self, problem, schedule: SampleSchedule,
                 record_samples: bool = False):
        self.problem = problem
        self.schedule = schedule
        self.cache = EstimateCache(record_samples=record_samples)
        self.journal = []

    def _journal(self, k, x, samples):
        if self.cache.record_samples:
            h = point_hash(x)
            self.journal.extend((k, h, float(v)) for v in samples)

    def begin_run(self, x0, delta0, rng) -> int:
        n0 = self.schedule(0, delta0)
        mean, count, samples = fresh_estimate(self.problem, x0, n0, rng)
        self.cache.reset_incumbent(mean, count, samples)
        self._journal(0, x0, samples)
        return n0

    def incumbent_value(self, x, k, delta) -> float:
        return self.cache.incumbent_mean

    def trial_cost(self, k, delta) -> int:
        return self.schedule(k, delta)

    def trial_value(self, x, k, delta, rng) -> TrialEstimate:
        n_k = self.schedule(k, delta)
        mean, count, samples = fresh_estimate(self.problem, x, n_k, rng)
        self._journal(k, x, samples)
        keep = samples if self.cache.record_samples else None
        return TrialEstimate(value=mean, count=count, cost=n_k, samples=keep)

    def on_success(self, trial: TrialEstimate, x_new, k_next, delta_next, rng) -> int:
        n_next = self.schedule(k_next, delta_next)
        cost = promote_on_success(self.cache, trial, self.problem, x_new,
                                  n_next, rng)
        if self.cache.record_samples:
            self._journal(k_next, x_new, self.cache.sample_log[-n_next:])
        return cost

    def on_failure(self, x, k_next, delta_next, rng) -> int:
        n_next = self.schedule(k_next, delta_next)
        cost = refine_on_failure(self.cache, self.problem, x, n_next, rng)
        if self.cache.record_samples:
            self._journal(k_next, x, self.cache.sample_log[-n_next:])
        return cost

    def write_sample_log(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("iteration,point_hash,sample\n")
            for k, h, v in self.journal:
                fh.write(f"{k},{h},{v!r}\n")


class OracleEstimator:
    """Exact-value estimator with a controllable accuracy-band offset.

    mode "exact": returns the true value.
    mode "worst-case-good": stays inside the eps_f*delta^2 band but at its
      adversarial edge (incumbent shifted up, trials shifted down), the
      configuration that maximally tempts the acceptance test.
    mode "adversarial-bad": violates the band by `violation` times its width.

    Evaluation costs mirror the sampling schedule so budgets stay comparable
    with the Monte-Carlo path.
    """

    def __init__(self, problem, eps_f: float, mode: str = "exact",
                 schedule: SampleSchedule | None = None, violation: float = 10.0):
        if mode not in ("exact", "worst-case-good", "adversarial-bad"):
            raise ValueError(f"unknown oracle mode {mode!r}")
        self.problem = problem
        self.eps_f = eps_f
        self.mode = mode
        self.schedule = schedule or SampleSchedule()
        self.violation = violation

    def _offset(self, delta: float) -> float:
        if self.mode == "exact":
            return 0.0
        band = self.eps_f * delta * delta
        return band if self.mode == "worst-case-good" else self.violation * band

    def begin_run(self, x0, delta0, rng) -> int:
        return self.schedule(0, delta0)

    def incumbent_value(self, x, k, delta) -> float:
        return self.problem.f_true(x) + self._offset(delta)

    def trial_cost(self, k, delta) -> int:
        return self.schedule(k, delta)

    def trial_value(self, x, k, delta, rng) -> TrialEstimate:
        n_k = self.schedule(k, delta)
        value = self.problem.f_true(x) - self._offset(delta)
        return TrialEstimate(value=value, count=n_k, cost=n_k)

    def on_success(self, trial, x_new, k_next, delta_next, rng) -> int:
        return self.schedule(k_next, delta_next)

    def on_failure(self, x, k_next, delta_next, rng) -> int:
        return self.schedule(k_next, delta_next)


def oracle_estimator(problem, eps_f: float, mode: str, **kwargs) -> OracleEstimator:
    return OracleEstimator(problem, eps_f, mode=mode, **kwargs)
