"""Monte-Carlo and exact verification of the geometric and probabilistic
properties the solver relies on, runnable standalone via the CLI.

Checks with unknown absolute constants (the norm-concentration rate in the
embedding dimension) are verified qualitatively: in-band probability must
be nondecreasing in the subspace dimension and saturate at 1 in full space.
Frequency comparisons use two 95% Monte-Carlo error bars of slack so the
flake rate stays below 1e-3 per check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (DirectionSet, cosine_measure, pss_from_basis,
                       sample_frame, sample_haar_orthogonal)
from .streams import stream

__all__ = [
    "DiagnosticReport",
    "check_jlt",
    "check_acute_angle",
    "check_haar_moments",
    "check_sphere_uniformity",
    "supermartingale_trace",
    "run_verification_suite",
    "mc_error",
]


@dataclass
class DiagnosticReport:
    name: str
    trials: int
    empirical_value: float
    reference_value: float | None
    tolerance: float
    verdict: str  # "pass" | "fail" | "informational"
    detail: str = ""

    def line(self) -> str:
        ref = "-" if self.reference_value is None else f"{self.reference_value:.6g}"
        out = (f"{self.verdict.upper():>13}  {self.name}  empirical="
               f"{self.empirical_value:.6g} reference={ref} tol={self.tolerance:.3g}")
        if self.detail:
            out += f"  [{self.detail}]"
        return out


def mc_error(p_hat: float, trials: int) -> float:
    """95% normal-approximation error bar for an empirical frequency."""
    return 1.96 * math.sqrt(max(p_hat * (1.0 - p_hat), 1e-12) / trials)


# ---------------------------------------------------------------------------
# norm concentration of the scaled embedding

def _inband_probability(n: int, p: int, eps_q: float, trials: int,
                        rng: np.random.Generator) -> float:
    scale = math.sqrt(n / p)
    hits = 0
    for _ in range(trials):
        x = rng.standard_normal(n)
        x /= np.linalg.norm(x)
        frame = sample_frame(n, p, rng)
        norm = scale * np.linalg.norm(frame.columns.T @ x)
        if 1.0 - eps_q <= norm <= 1.0 + eps_q:
            hits += 1
    return hits / trials


def check_jlt(n: int, p_list, eps_q: float, trials: int, seed: int) -> list[DiagnosticReport]:
    """In-band probability of the scaled embedding per subspace dimension.

    Pass requires the probability to be nondecreasing across sorted p (within
    two error bars) and >= 0.99 at p = n, where the embedding is an exact
    isometry.
    """
    if trials < 1000:
        raise ValueError("need at least 1e3 trials for stable frequencies")
    p_list = sorted(p_list)
    if any(p < 1 or p > n for p in p_list):
        raise ValueError("every p must satisfy 1 <= p <= n")
    probs = []
    for p in p_list:
        rng = stream(seed, "jlt", p)
        probs.append(_inband_probability(n, p, eps_q, trials, rng))
    reports = []
    for i, (p, prob) in enumerate(zip(p_list, probs)):
        err = mc_error(prob, trials)
        ok = True
        detail = f"p={p}"
        if i > 0:
            prev_err = mc_error(probs[i - 1], trials)
            ok &= prob >= probs[i - 1] - 2.0 * (err + prev_err)
            detail += f" vs p={p_list[i - 1]}: {probs[i - 1]:.4f}"
        if p == n:
            ok &= prob >= 0.99
        reports.append(DiagnosticReport(
            name=f"embedding-norm-in-band(n={n},p={p},eps={eps_q})",
            trials=trials, empirical_value=prob, reference_value=None,
            tolerance=2.0 * err, verdict="pass" if ok else "fail",
            detail=detail))
    return reports


# ---------------------------------------------------------------------------
# acute-angle event vs well-alignment event

def check_acute_angle(n: int, p: int, trials: int, seed: int,
                      alpha_q: float = 0.1, pss_provider=None) -> DiagnosticReport:
    """Frequency of a poll direction making a sufficiently acute angle with
    a fixed vector, compared against the well-alignment frequency.

    The alignment event implies the acute-angle event, so the first
    frequency must dominate the second up to Monte-Carlo error.  By default
    the direction sets are random minimal spanning sets, whose measure kappa
    is an orthogonal invariant computed once from the canonical basis;
    `pss_provider(rng)` injects custom sets, and a non-spanning injected set
    (kappa <= 0) downgrades the check to informational.
    """
    if not 0.0 < alpha_q < 0.5:
        raise ValueError("alpha_q must lie in (0, 1/2)")
    rng = stream(seed, "acute")
    if pss_provider is None:
        sample_pss = lambda r: pss_from_basis(sample_haar_orthogonal(p, r).matrix)
        kappa = cosine_measure(pss_from_basis(np.eye(p)), grid_check=False)
    else:
        sample_pss = pss_provider
        kappa = cosine_measure(pss_provider(stream(seed, "acute-kappa")),
                               grid_check=False)
    if kappa <= 0.0:
        return DiagnosticReport(
            name=f"acute-angle(n={n},p={p})", trials=0, empirical_value=0.0,
            reference_value=None, tolerance=0.0, verdict="informational",
            detail="degenerate direction set, check skipped")
    v = np.zeros(n)
    v[0] = 1.0
    scale = math.sqrt(n / p)
    acute_hits = 0
    aligned_hits = 0
    for _ in range(trials):
        frame = sample_frame(n, p, rng)
        pss = sample_pss(rng)
        q_dirs = scale * (pss.directions @ frame.columns.T)  # rows Q d
        best = float(np.max(q_dirs @ v))
        if best >= alpha_q * kappa:
            acute_hits += 1
        if np.linalg.norm(scale * (frame.columns.T @ v)) >= alpha_q:
            aligned_hits += 1
    acute = acute_hits / trials
    aligned = aligned_hits / trials
    slack = 2.0 * (mc_error(acute, trials) + mc_error(aligned, trials))
    verdict = "pass" if acute >= aligned - slack else "fail"
    return DiagnosticReport(
        name=f"acute-angle(n={n},p={p},alpha={alpha_q})", trials=trials,
        empirical_value=acute, reference_value=aligned, tolerance=slack,
        verdict=verdict, detail=f"kappa={kappa:.4f}")


# ---------------------------------------------------------------------------
# entry moments of uniform orthogonal matrices

def _haar_u11_batch(n: int, draws: int, rng: np.random.Generator) -> np.ndarray:
    """First entries of `draws` uniform orthogonal matrices, chunked so the
    Ginibre blocks stay cache-sized."""
    out = np.empty(draws)
    chunk = max(1, min(draws, 268_435_456 // (8 * n * n)))
    done = 0
    while done < draws:
        b = min(chunk, draws - done)
        x = rng.standard_normal((b, n, n))
        q, r = np.linalg.qr(x)
        d0 = np.sign(r[:, 0, 0])
        d0[d0 == 0] = 1.0
        out[done:done + b] = q[:, 0, 0] * d0
        done += b
    return out


def check_haar_moments(n: int, trials: int, seed: int) -> DiagnosticReport:
    """mean(U11) ~ 0 and mean(U11^2) ~ 1/n within four standard errors."""
    rng = stream(seed, "moments")
    u11 = _haar_u11_batch(n, trials, rng)
    se1 = u11.std() / math.sqrt(trials)
    sq = u11 * u11
    se2 = sq.std() / math.sqrt(trials)
    ok = abs(u11.mean()) <= 4.0 * se1 and abs(sq.mean() - 1.0 / n) <= 4.0 * se2
    return DiagnosticReport(
        name=f"haar-entry-moments(n={n})", trials=trials,
        empirical_value=float(sq.mean()), reference_value=1.0 / n,
        tolerance=4.0 * se2, verdict="pass" if ok else "fail",
        detail=f"mean={u11.mean():.2e} (band {4.0 * se1:.2e})")


# ---------------------------------------------------------------------------
# image of a unit vector through a random frame

def check_sphere_uniformity(n: int, p: int, trials: int, seed: int) -> DiagnosticReport:
    """u = columns @ d for random unit d is uniform on the sphere: unit norm
    always, first coordinate with mean 0 and second moment 1/n."""
    if trials < 10_000:
        raise ValueError("need at least 1e4 trials")
    rng = stream(seed, "sphere")
    first = np.empty(trials)
    for i in range(trials):
        frame = sample_frame(n, p, rng)
        d = rng.standard_normal(p)
        d /= np.linalg.norm(d)
        u = frame.columns @ d
        norm = np.linalg.norm(u)
        if abs(norm - 1.0) > 1e-12:
            return DiagnosticReport(
                name=f"sphere-uniformity(n={n},p={p})", trials=trials,
                empirical_value=norm, reference_value=1.0, tolerance=1e-12,
                verdict="fail", detail="image norm off the sphere")
        first[i] = u[0]
    se1 = first.std() / math.sqrt(trials)
    sq = first * first
    se2 = sq.std() / math.sqrt(trials)
    ok = abs(first.mean()) <= 4.0 * se1 and abs(sq.mean() - 1.0 / n) <= 4.0 * se2
    return DiagnosticReport(
        name=f"sphere-uniformity(n={n},p={p})", trials=trials,
        empirical_value=float(sq.mean()), reference_value=1.0 / n,
        tolerance=4.0 * se2, verdict="pass" if ok else "fail")


# ---------------------------------------------------------------------------
# per-run descent diagnostic

def supermartingale_trace(trace, nu: float, eps_f: float, f_min: float):
    """Descent functional Phi_k = (nu/eps_f)(f(x_k) - f_min) + (1-nu)delta_k^2.

    Returns (phi series, sum of squared stepsizes, windowed-median
    nonincreasing flag).  The flag is informational: single realizations of
    a supermartingale may increase locally.
    """
    if not 0.0 < nu < 1.0:
        raise ValueError("nu must lie in (0, 1)")
    f = np.asarray(trace.f_true, dtype=float)
    d = np.asarray(trace.delta, dtype=float)
    phi = (nu / eps_f) * (f - f_min) + (1.0 - nu) * d * d
    sum_d2 = float(np.sum(d[:-1] ** 2)) if len(d) > 1 else 0.0
    window = 50
    if len(phi) >= 2 * window:
        medians = [float(np.median(phi[i:i + window]))
                   for i in range(0, len(phi) - window + 1, window)]
        monotone = all(b <= a * (1.0 + 1e-9) for a, b in zip(medians, medians[1:]))
    else:
        monotone = True
    return phi, sum_d2, monotone


def supermartingale_report(trace, nu: float, eps_f: float, f_min: float) -> DiagnosticReport:
    phi, sum_d2, monotone = supermartingale_trace(trace, nu, eps_f, f_min)
    return DiagnosticReport(
        name="descent-functional", trials=len(phi),
        empirical_value=float(phi[-1]), reference_value=float(phi[0]),
        tolerance=0.0, verdict="informational",
        detail=f"sum_d2={sum_d2:.4g} windowed_monotone={monotone}")


# ---------------------------------------------------------------------------
# suite

def run_verification_suite(trials: int = 10_000, seed: int = 0,
                           scale: str = "desk") -> list[DiagnosticReport]:
    """The full stand-alone verification battery."""
    n = 50 if scale == "desk" else 100
    reports = []
    reports.append(check_haar_moments(2, max(trials, 10_000), seed))
    reports.append(check_haar_moments(n, max(trials, 10_000), seed))
    reports.extend(check_jlt(n, [max(1, n // 10), n // 2, n], 0.5,
                             max(trials, 1000), seed))
    reports.append(check_acute_angle(n, max(2, n // 10), trials, seed))
    reports.append(check_sphere_uniformity(10, 3, max(trials, 10_000), seed))
    return reports
