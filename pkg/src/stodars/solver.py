"""Stochastic direct search in random subspaces, with full-space baselines.

One iteration: draw (or re-use, keyed by the matrix index t) an orthonormal
frame and a positive spanning set, embed the subspace directions into the
full space, poll the scaled directions around the incumbent, and accept the
first (opportunistic) or best trial whose estimated decrease beats
-gamma*eps_f*delta^2.  Success doubles the stepsize (capped), failure
halves it; a counter ell tracks failures minus successes, and the matrix
index t is assigned so that along any stepsize-vanishing subsequence the
indices sweep all of 0, 1, 2, ..., which is what makes the full direction
sequence dense on the sphere.

Variants:
  stodars      subspace polling with a p+1 minimal positive basis
  sdds_minimal full-space minimal positive basis (identity frame)
  fullspace_2n +/- columns of a fresh random orthogonal matrix (a mesh-free
               stand-in for 2n-direction full-space polling)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .estimator import MonteCarloEstimator, SampleSchedule
from .geometry import (DirectionSet, SubspaceFrame, map_to_fullspace,
                       minimal_positive_basis, sample_frame,
                       sample_haar_orthogonal)
from .streams import stream

__all__ = [
    "ConfigError",
    "SolverConfig",
    "IterationState",
    "PollOutcome",
    "RunTrace",
    "tau_upper_bound",
    "next_delta_ell",
    "next_matrix_index",
    "build_poll_set",
    "order_directions",
    "poll",
    "run",
    "VARIANTS",
]

VARIANTS = ("stodars", "sdds_minimal", "fullspace_2n")


class ConfigError(ValueError):
    """Invalid configuration; `key` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def tau_upper_bound(gamma: float) -> float:
    return math.sqrt((gamma - 2.0) / (gamma + 2.0))


@dataclass(frozen=True)
class SolverConfig:
    gamma: float = 4.0
    eps_f: float = 0.25
    tau: float = 0.5
    delta0: float = 1.0
    j_max: int = 10
    p: int = 2  # 0 means full space: resolved to the problem dimension
    m: int = 0  # 0 means minimal: p+1 directions
    nk: int = 4
    nk_mode: str = "fixed"
    opportunistic: bool = True
    sort_by_last_success: bool = True
    budget: int = 0  # 0 means 1500*(n+1), resolved per problem
    variant: str = "stodars"
    # diagnostics only: also estimate infeasible poll points (never accepted)
    estimate_infeasible: bool = False

    @property
    def delta_max(self) -> float:
        return self.tau ** (-self.j_max) * self.delta0

    @property
    def acceptance_product(self) -> float:
        return self.gamma * self.eps_f

    def validate(self) -> None:
        if not self.gamma > 2.0:
            raise ConfigError("solver.gamma", f"requires gamma > 2, got {self.gamma}")
        if not self.eps_f > 0.0:
            raise ConfigError("solver.eps_f", f"requires eps_f > 0, got {self.eps_f}")
        bound = tau_upper_bound(self.gamma)
        if not 0.0 < self.tau < bound:
            raise ConfigError(
                "solver.tau",
                f"requires 0 < tau < sqrt((gamma-2)/(gamma+2)) = {bound:.6f}, "
                f"got {self.tau}",
            )
        if not self.delta0 > 0.0:
            raise ConfigError("solver.delta0", "requires delta0 > 0")
        if self.j_max < 0:
            raise ConfigError("solver.j_max", "requires j_max >= 0")
        if self.p < 0:
            raise ConfigError("solver.p", "requires p >= 1 (or 0 for p = n)")
        if self.m != 0 and self.p > 0 and self.m < self.p + 1:
            raise ConfigError("solver.m", f"requires m >= p+1 = {self.p + 1}")
        if self.nk < 1:
            raise ConfigError("solver.nk", "requires nk >= 1")
        if self.nk_mode not in ("fixed", "delta4"):
            raise ConfigError("solver.nk_mode", f"unknown mode {self.nk_mode!r}")
        if self.budget < 0:
            raise ConfigError("solver.budget", "requires budget >= 0")
        if self.variant not in VARIANTS:
            raise ConfigError("solver.variant", f"unknown variant {self.variant!r}")

    def validate_for_dim(self, n: int) -> None:
        self.validate()
        if self.variant == "stodars" and self.p > n:
            raise ConfigError("solver.p", f"requires p <= n = {n}, got {self.p}")
        if self.m != 0 and self.m > 2 * n:
            raise ConfigError("solver.m", f"requires m <= 2n = {2 * n}")

    def resolve_budget(self, n: int) -> int:
        return self.budget if self.budget > 0 else 1500 * (n + 1)

    def schedule(self) -> SampleSchedule:
        return SampleSchedule(base=self.nk, mode=self.nk_mode, delta0=self.delta0)


@dataclass
class IterationState:
    k: int
    x: np.ndarray
    delta: float
    ell: int
    t: int
    max_ell_seen: int
    max_t_seen: int
    last_success_dir: np.ndarray | None
    eval_count: int


@dataclass
class PollOutcome:
    success: bool
    accepted_direction: np.ndarray | None = None
    accepted_trial: object = None
    decrease_value: float = math.nan
    evals_used: int = 0
    budget_exhausted: bool = False


# ---------------------------------------------------------------------------
# stepsize / matrix-index automaton

def next_delta_ell(delta: float, ell: int, success: bool, config: SolverConfig):
    if success:
        return min(delta / config.tau, config.delta_max), ell - 1
    return config.tau * delta, ell + 1


def next_matrix_index(ell_next: int, max_ell_seen: int, max_t_seen: int):
    """Assign t for the next iteration and roll the running maxima forward.

    `max_ell_seen` / `max_t_seen` are the maxima over iterations 0..k, i.e.
    they do not yet include the incoming ell_next.
    """
    if ell_next >= max_ell_seen:
        t_next = ell_next
    else:
        t_next = max_t_seen + 1
    return t_next, max(max_ell_seen, ell_next), max(max_t_seen, t_next)


def replay_index_automaton(outcomes: str):
    """Fold an outcome string ('S'/'F') through the automaton; returns the
    per-iteration (ell, t) assignments."""
    ell, max_ell, max_t = 0, 0, 0
    ells, ts = [], []
    for o in outcomes:
        ell = ell - 1 if o == "S" else ell + 1
        t, max_ell, max_t = next_matrix_index(ell, max_ell, max_t)
        ells.append(ell)
        ts.append(t)
    return ells, ts


# ---------------------------------------------------------------------------
# polling

def _identity_frame(n: int) -> SubspaceFrame:
    return SubspaceFrame(columns=np.eye(n), scale=1.0)


def build_poll_set(n: int, t: int, config: SolverConfig, seed: int):
    """Frame and full-space poll directions for matrix index t.

    Streams are keyed by (seed, consumer, t), so any revisit of an index t
    reproduces the identical frame and spanning set.
    """
    matrix_rng = stream(seed, "matrix", t)
    pss_rng = stream(seed, "pss", t)
    if config.variant == "stodars":
        frame = sample_frame(n, config.p, matrix_rng)
        frame.origin_index = t
        pss = minimal_positive_basis(config.p, pss_rng)
        if config.m > config.p + 1:
            extra = pss_rng.standard_normal((config.m - config.p - 1, config.p))
            extra /= np.linalg.norm(extra, axis=1, keepdims=True)
            pss = DirectionSet(np.vstack([pss.directions, extra]),
                               tag="pss_subspace")
        dirs = map_to_fullspace(frame, pss)
        return frame, dirs
    if config.variant == "sdds_minimal":
        frame = _identity_frame(n)
        frame.origin_index = t
        pss = minimal_positive_basis(n, pss_rng)
        return frame, DirectionSet(pss.directions.copy(), tag="poll_fullspace")
    if config.variant == "fullspace_2n":
        frame = _identity_frame(n)
        frame.origin_index = t
        u = sample_haar_orthogonal(n, matrix_rng).matrix
        dirs = np.vstack([u.T, -u.T])
        return frame, DirectionSet(dirs, tag="poll_fullspace")
    raise ConfigError("solver.variant", f"unknown variant {config.variant!r}")


def order_directions(dset: DirectionSet,
                     last_success: np.ndarray | None) -> DirectionSet:
    """Sort by descending inner product with the last successful direction;
    stable, so ties keep their original relative order."""
    if last_success is None:
        return dset
    dots = dset.directions @ last_success
    order = np.argsort(-dots, kind="stable")
    return DirectionSet(dset.directions[order], tag=dset.tag)


def poll(state: IterationState, config: SolverConfig, poll_dirs: DirectionSet,
         estimator, feasible, noise_rng, budget: int) -> PollOutcome:
    """Try the poll points x + delta*u in order.

    Infeasible points are skipped without spending estimates.  Opportunistic
    polling returns at the first trial passing the acceptance test;
    otherwise every feasible trial is estimated and the passer with the most
    negative estimated decrease wins.  Runs out of budget mid-poll flag the
    outcome and the caller terminates.
    """
    threshold = -config.acceptance_product * state.delta * state.delta
    incumbent = estimator.incumbent_value(state.x, state.k, state.delta)
    evals = 0
    best = None  # (decrease, direction, trial)
    for u in poll_dirs.directions:
        x_trial = state.x + state.delta * u
        is_feasible = feasible(x_trial)
        if not is_feasible and not config.estimate_infeasible:
            continue
        cost = estimator.trial_cost(state.k, state.delta)
        if state.eval_count + evals + cost > budget:
            return PollOutcome(success=False, evals_used=evals,
                               budget_exhausted=True)
        trial = estimator.trial_value(x_trial, state.k, state.delta, noise_rng)
        evals += trial.cost
        if not is_feasible:
            continue  # diagnostics mode: estimated but never accepted
        decrease = trial.value - incumbent
        if decrease <= threshold:
            if config.opportunistic:
                out = PollOutcome(success=True, accepted_direction=u.copy(),
                                  decrease_value=decrease, evals_used=evals)
                out.accepted_trial = trial
                return out
            if best is None or decrease < best[0]:
                best = (decrease, u.copy(), trial)
    if best is not None:
        out = PollOutcome(success=True, accepted_direction=best[1],
                          decrease_value=best[0], evals_used=evals)
        out.accepted_trial = best[2]
        return out
    return PollOutcome(success=False, evals_used=evals)


# ---------------------------------------------------------------------------
# run traces

_TRACE_COLUMNS = ("k", "outcome", "delta", "ell", "t", "f_true",
                  "f_est_incumbent", "evals_cumulative")


@dataclass
class RunTrace:
    """Per-iteration history of one run.

    Row j is the state after j iterations (row 0 is the initial state, with
    outcome "start"): incumbent objective value, stepsize, counter and
    matrix index entering iteration j, and cumulative noisy evaluations
    after iteration j-1 finished.
    """

    problem: str = ""
    solver: str = ""
    seed: int = 0
    n: int = 0
    k: list = field(default_factory=list)
    outcome: list = field(default_factory=list)
    delta: list = field(default_factory=list)
    ell: list = field(default_factory=list)
    t: list = field(default_factory=list)
    f_true: list = field(default_factory=list)
    f_est: list = field(default_factory=list)
    evals: list = field(default_factory=list)
    final_x: np.ndarray | None = None

    def append(self, k, outcome, delta, ell, t, f_true, f_est, evals):
        self.k.append(k)
        self.outcome.append(outcome)
        self.delta.append(delta)
        self.ell.append(ell)
        self.t.append(t)
        self.f_true.append(f_true)
        self.f_est.append(f_est)
        self.evals.append(evals)

    def __len__(self) -> int:
        return len(self.k)

    def rows(self):
        for i in range(len(self.k)):
            yield (self.k[i], self.outcome[i], self.delta[i], self.ell[i],
                   self.t[i], self.f_true[i], self.f_est[i], self.evals[i])

    def to_csv(self, path) -> None:
        # repr() keeps the shortest round-tripping decimal form, so reading
        # the file back reproduces the exact float bits
        with open(path, "w") as fh:
            fh.write(",".join(_TRACE_COLUMNS) + "\n")
            for row in self.rows():
                k, outcome, delta, ell, t, ft, fe, ev = row
                fh.write(f"{k},{outcome},{delta!r},{ell},{t},{ft!r},{fe!r},{ev}\n")

    @classmethod
    def from_csv(cls, path, problem="", solver="", seed=0, n=0) -> "RunTrace":
        trace = cls(problem=problem, solver=solver, seed=seed, n=n)
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            if tuple(header) != _TRACE_COLUMNS:
                raise ValueError(f"unexpected trace header in {path}")
            for line in fh:
                k, outcome, delta, ell, t, ft, fe, ev = line.rstrip("\n").split(",")
                trace.append(int(k), outcome, float(delta), int(ell), int(t),
                             float(ft), float(fe), int(ev))
        return trace


# ---------------------------------------------------------------------------
# main loop

def run(problem, config: SolverConfig, seed: int, estimator=None,
        solver_name: str = "") -> RunTrace:
    """Run the configured solver on one noisy problem instance.

    The trace records the true objective at every incumbent (an oracle-side
    quantity for benchmarking; the solver itself only sees noisy samples).
    """
    n = problem.dim
    if config.variant == "stodars" and config.p == 0:
        config = replace(config, p=n)
    config.validate_for_dim(n)
    x0 = np.asarray(problem.x0, dtype=float)
    if not problem.feasible(x0):
        raise ValueError(f"infeasible start point for {problem.name}")
    budget = config.resolve_budget(n)
    if estimator is None:
        estimator = MonteCarloEstimator(problem, config.schedule())
    noise_rng = stream(seed, "noise")

    trace = RunTrace(problem=getattr(problem, "name", ""), solver=solver_name,
                     seed=seed, n=n)
    trace.append(0, "start", config.delta0, 0, 0, problem.f_true(x0),
                 math.nan, 0)

    n0 = estimator.trial_cost(0, config.delta0)
    if n0 > budget:
        trace.final_x = x0
        return trace
    evals = estimator.begin_run(x0, config.delta0, noise_rng)

    state = IterationState(k=0, x=x0, delta=config.delta0, ell=0, t=0,
                           max_ell_seen=0, max_t_seen=0,
                           last_success_dir=None, eval_count=evals)
    poll_cache: dict[int, DirectionSet] = {}

    while True:
        dirs = poll_cache.get(state.t)
        if dirs is None:
            _, dirs = build_poll_set(n, state.t, config, seed)
            poll_cache[state.t] = dirs
        ordered = order_directions(dirs, state.last_success_dir) \
            if config.sort_by_last_success else dirs

        outcome = poll(state, config, ordered, estimator, problem.feasible,
                       noise_rng, budget)
        state.eval_count += outcome.evals_used
        if outcome.budget_exhausted:
            break

        delta_next, ell_next = next_delta_ell(state.delta, state.ell,
                                              outcome.success, config)
        t_next, state.max_ell_seen, state.max_t_seen = next_matrix_index(
            ell_next, state.max_ell_seen, state.max_t_seen)

        if outcome.success:
            x_next = state.x + state.delta * outcome.accepted_direction
            state.last_success_dir = outcome.accepted_direction
        else:
            x_next = state.x

        # refresh the incumbent estimate for the next iteration
        n_next = estimator.trial_cost(state.k + 1, delta_next)
        if state.eval_count + n_next > budget:
            refreshed = False
        else:
            if outcome.success:
                state.eval_count += estimator.on_success(
                    outcome.accepted_trial, x_next, state.k + 1, delta_next,
                    noise_rng)
            else:
                state.eval_count += estimator.on_failure(
                    x_next, state.k + 1, delta_next, noise_rng)
            refreshed = True

        state.k += 1
        state.x = x_next
        state.delta = delta_next
        state.ell = ell_next
        state.t = t_next

        if refreshed:
            f_est = estimator.incumbent_value(state.x, state.k, state.delta)
        elif outcome.success:
            # no budget left to top the trial up; its own mean stands in
            f_est = outcome.accepted_trial.value
        else:
            f_est = estimator.incumbent_value(state.x, state.k, state.delta)
        trace.append(state.k, "S" if outcome.success else "F", state.delta,
                     state.ell, state.t, problem.f_true(state.x), f_est,
                     state.eval_count)
        if not refreshed or state.eval_count >= budget:
            break

    trace.final_x = state.x
    return trace
