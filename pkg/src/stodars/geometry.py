"""Random orthogonal geometry: uniform orthogonal matrices, subspace frames,
positive spanning sets, and cosine measures.

Uniform (rotation-invariant) orthogonal matrices are sampled by QR-factoring
a square matrix with i.i.d. standard normal entries and absorbing the signs
of diag(R) into Q.  The sign correction makes the factorization canonical
(R with positive diagonal), which is what yields the invariant distribution
for any QR implementation, Householder included.

A subspace frame is the first p columns of such a matrix together with the
norm-restoring scale sqrt(n/p); the scaled frame acts as a randomized
norm-preserving embedding of R^p into R^n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

__all__ = [
    "GinibreMatrix",
    "HaarOrthogonal",
    "SubspaceFrame",
    "DirectionSet",
    "sample_ginibre",
    "sample_haar_orthogonal",
    "sample_frame",
    "take_frame",
    "minimal_positive_basis",
    "pss_from_basis",
    "map_to_fullspace",
    "cosine_measure",
    "restricted_cosine_measure",
    "cosine_measure_grid",
    "empirical_min_alignment",
]


# ---------------------------------------------------------------------------
# types

@dataclass(eq=False)
class GinibreMatrix:
    """Square matrix with i.i.d. standard normal entries, tagged with the
    integer state snapshot of the stream that produced it."""

    entries: np.ndarray
    seed_state: int = 0


@dataclass(eq=False)
class HaarOrthogonal:
    """Uniform random element of the orthogonal group O(n)."""

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def orthonormality_residual(self) -> float:
        u = self.matrix
        return float(np.linalg.norm(u.T @ u - np.eye(u.shape[1])))


@dataclass(eq=False)
class SubspaceFrame:
    """Orthonormal n-by-p column block plus its norm-restoring scale.

    `origin_index` records the matrix-stream index t that produced the
    frame (-1 when the frame was built outside any indexed stream).
    """

    columns: np.ndarray
    scale: float
    origin_index: int = -1

    @property
    def n(self) -> int:
        return self.columns.shape[0]

    @property
    def p(self) -> int:
        return self.columns.shape[1]

    def embedding(self) -> np.ndarray:
        """The scaled matrix Q = sqrt(n/p) * columns."""
        return self.scale * self.columns

    def orthonormality_residual(self) -> float:
        c = self.columns
        return float(np.linalg.norm(c.T @ c - np.eye(c.shape[1])))


@dataclass(eq=False)
class DirectionSet:
    """Ordered set of unit directions, one per row.

    tag is "pss_subspace" for sets meant to positively span their own
    space, "poll_fullspace" for embedded poll directions.
    """

    directions: np.ndarray
    tag: str = "pss_subspace"

    @property
    def ambient_dim(self) -> int:
        return self.directions.shape[1]

    def __len__(self) -> int:
        return self.directions.shape[0]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.directions, axis=1)


# ---------------------------------------------------------------------------
# sampling

def sample_ginibre(n: int, rng: np.random.Generator) -> GinibreMatrix:
    """Draw an n-by-n matrix with i.i.d. standard normal entries."""
    if n < 1:
        raise ValueError(f"matrix dimension must be >= 1, got {n}")
    return GinibreMatrix(entries=rng.standard_normal((n, n)))


def _sign_corrected_q(x: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(x)
    d = np.sign(np.einsum("...ii->...i", r))
    d[d == 0] = 1.0  # measure-zero tie, broken deterministically
    return q * d[..., None, :]


def sample_haar_orthogonal(n: int, rng: np.random.Generator) -> HaarOrthogonal:
    """Draw a uniform random n-by-n orthogonal matrix.

    QR of a standard normal matrix, with diag-sign correction U = Q*sign(R_ii)
    so the result is invariant under the orthogonal group.
    """
    g = sample_ginibre(n, rng)
    return HaarOrthogonal(matrix=_sign_corrected_q(g.entries))


def sample_frame(n: int, p: int, rng: np.random.Generator) -> SubspaceFrame:
    """Draw a uniform orthonormal n-by-p frame (scale sqrt(n/p)).

    Distributionally identical to slicing the first p columns off a full
    uniform orthogonal matrix, but sampled via economy QR of an n-by-p
    normal block, which is much cheaper for p << n.
    """
    if p < 1 or p > n:
        raise ValueError(f"need 1 <= p <= n, got p={p}, n={n}")
    x = rng.standard_normal((n, p))
    return SubspaceFrame(columns=_sign_corrected_q(x), scale=math.sqrt(n / p))


def take_frame(u: HaarOrthogonal, p: int) -> SubspaceFrame:
    """First p columns of a full orthogonal matrix, with scale sqrt(n/p)."""
    n = u.dim
    if p < 1 or p > n:
        raise ValueError(f"need 1 <= p <= n, got p={p}, n={n}")
    return SubspaceFrame(columns=u.matrix[:, :p].copy(), scale=math.sqrt(n / p))


def pss_from_basis(basis: np.ndarray) -> DirectionSet:
    """Minimal positive spanning set from an orthonormal basis.

    The p basis columns are augmented with the negated, normalized column
    sum; orthonormality makes that sum have norm sqrt(p) exactly.
    """
    p = basis.shape[1]
    s = basis.sum(axis=1)
    d_s = s / np.linalg.norm(s)
    dirs = np.empty((p + 1, p))
    dirs[:p] = basis.T
    dirs[p] = -d_s
    return DirectionSet(directions=dirs, tag="pss_subspace")


def minimal_positive_basis(p: int, rng: np.random.Generator) -> DirectionSet:
    """Random minimal positive spanning set of R^p (p+1 unit directions)."""
    if p < 1:
        raise ValueError(f"dimension must be >= 1, got {p}")
    b = sample_haar_orthogonal(p, rng)
    return pss_from_basis(b.matrix)


def map_to_fullspace(frame: SubspaceFrame, dset: DirectionSet) -> DirectionSet:
    """Push subspace directions through the frame: d |-> columns @ d.

    Orthonormal columns preserve norms and pairwise inner products, so the
    images are unit vectors with the same Gram matrix, in the same order.
    """
    if dset.ambient_dim != frame.p:
        raise ValueError(
            f"direction dimension {dset.ambient_dim} does not match frame p={frame.p}"
        )
    images = dset.directions @ frame.columns.T
    return DirectionSet(directions=images, tag="poll_fullspace")


# ---------------------------------------------------------------------------
# cosine measure

#: internal refinement tolerance; public acceptance tolerance is 1e-6
_REFINE_TOL = 1e-8
_RANDOM_STARTS = 200
_SUBSET_BUDGET = 8000


def _poll_height(dirs: np.ndarray, w: np.ndarray) -> float:
    return float(np.max(dirs @ w))


def _equalizer_candidates(dirs: np.ndarray, subset: tuple[int, ...]) -> list[np.ndarray]:
    """Unit vectors with equal inner product against the subset (both signs)."""
    sub = dirs[list(subset)]
    z, *_ = np.linalg.lstsq(sub, np.ones(len(subset)), rcond=None)
    nz = np.linalg.norm(z)
    if nz < 1e-14:
        return []
    z = z / nz
    return [z, -z]


def _negative_sum_seed(dirs: np.ndarray, subset: tuple[int, ...]) -> np.ndarray | None:
    s = -dirs[list(subset)].sum(axis=0)
    ns = np.linalg.norm(s)
    if ns < 1e-14:
        return None
    return s / ns


def _iter_subsets(m: int, q: int, rng: np.random.Generator):
    """Subsets of direction indices of size <= q, capped at _SUBSET_BUDGET.

    Sizes are exhausted in increasing order while the budget allows; a size
    whose full enumeration would blow the budget is sampled instead.
    """
    remaining = _SUBSET_BUDGET
    for size in range(1, min(q, m) + 1):
        count = math.comb(m, size)
        if count <= remaining:
            yield from combinations(range(m), size)
            remaining -= count
        else:
            for _ in range(remaining):
                yield tuple(sorted(rng.choice(m, size=size, replace=False).tolist()))
            return


def _local_descent(dirs: np.ndarray, w0: np.ndarray, tol: float = _REFINE_TOL) -> tuple[np.ndarray, float]:
    """Refine one start: alternate subgradient steps on the sphere with
    active-set equalizer jumps, keeping whichever improves."""
    w = w0 / np.linalg.norm(w0)
    h = _poll_height(dirs, w)
    step = 0.5
    for _ in range(120):
        vals = dirs @ w
        act = np.flatnonzero(vals >= h - 1e-9)
        best_w, best_h = w, h
        for cand in _equalizer_candidates(dirs, tuple(act)):
            hc = _poll_height(dirs, cand)
            if hc < best_h:
                best_w, best_h = cand, hc
        g = dirs[act].mean(axis=0)
        g_t = g - (g @ w) * w
        gn = np.linalg.norm(g_t)
        if gn > 1e-14:
            s = step
            for _ in range(30):
                cand = w - s * g_t
                cand = cand / np.linalg.norm(cand)
                hc = _poll_height(dirs, cand)
                if hc < best_h:
                    best_w, best_h = cand, hc
                    step = s
                    break
                s *= 0.5
        if best_h >= h - tol * 1e-2:
            return best_w, best_h
        w, h = best_w, best_h
    return w, h


def cosine_measure(dset: DirectionSet, rng: np.random.Generator | None = None,
                   grid_check: bool | None = None) -> float:
    """min over unit w of max over d of <w, d>, for unit directions d.

    Positive iff the set positively spans its space; a value <= 0 is a valid
    output signalling a non-spanning set.  Computed by multistart local
    minimization over the sphere: starts are (a) normalized negative sums of
    direction subsets of size <= q, (b) 200 random unit vectors, plus the
    exact equal-inner-product candidates of every enumerated subset.  For
    q <= 3 the result is cross-checked against a dense sphere-grid search
    (grid_check=False to skip after the routine has been validated).
    """
    dirs = np.asarray(dset.directions, dtype=float)
    if dirs.size == 0:
        raise ValueError("cosine measure of an empty direction set")
    m, q = dirs.shape
    if q == 1:
        best = min(float(np.max(dirs)), float(np.max(-dirs)))
        return best
    if rng is None:
        rng = np.random.default_rng(2024)

    best = math.inf
    seeds: list[np.ndarray] = []
    for subset in _iter_subsets(m, q, rng):
        for cand in _equalizer_candidates(dirs, subset):
            h = _poll_height(dirs, cand)
            if h < best:
                best = h
            seeds.append(cand)
        neg = _negative_sum_seed(dirs, subset)
        if neg is not None:
            seeds.append(neg)
    # rank-deficient sets admit directions orthogonal to the whole span
    rank = int(np.linalg.matrix_rank(dirs, tol=1e-12))
    if rank < q:
        _, _, vt = np.linalg.svd(dirs)
        for row in vt[rank:]:
            seeds.extend([row, -row])
    rand = rng.standard_normal((_RANDOM_STARTS, q))
    rand /= np.linalg.norm(rand, axis=1, keepdims=True)
    seeds.extend(rand)

    for w0 in seeds:
        _, h = _local_descent(dirs, w0)
        if h < best:
            best = h

    if grid_check is None:
        grid_check = q <= 3
    if grid_check and q <= 3:
        ref, resolution = cosine_measure_grid(dset, return_resolution=True)
        if abs(ref - best) > 3.0 * resolution + 1e-9:
            raise RuntimeError(
                f"cosine-measure multistart ({best:.9f}) disagrees with grid "
                f"oracle ({ref:.9f}) beyond resolution {resolution:.2e}"
            )
    return float(best)


def _fibonacci_sphere(count: int) -> np.ndarray:
    i = np.arange(count) + 0.5
    phi = math.pi * (1.0 + math.sqrt(5.0)) * i
    z = 1.0 - 2.0 * i / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def cosine_measure_grid(dset: DirectionSet, points: int = 2_000_000,
                        zoom_stages: int = 3, return_resolution: bool = False):
    """Dense sphere-grid evaluation of the cosine measure (q <= 3 only).

    q=1 is exact, q=2 scans angles, q=3 scans a Fibonacci lattice and then
    zooms a local lattice around the best point.  The returned resolution
    bounds |grid value - true value| via the unit Lipschitz constant of the
    poll height in geodesic distance.
    """
    dirs = np.asarray(dset.directions, dtype=float)
    if dirs.size == 0:
        raise ValueError("cosine measure of an empty direction set")
    q = dirs.shape[1]
    if q == 1:
        val = min(float(np.max(dirs)), float(np.max(-dirs)))
        return (val, 0.0) if return_resolution else val
    if q == 2:
        theta = np.linspace(0.0, 2.0 * math.pi, points, endpoint=False)
        grid = np.column_stack([np.cos(theta), np.sin(theta)])
        heights = np.max(dirs @ grid.T, axis=0)
        val = float(np.min(heights))
        res = math.pi / points
        return (val, res) if return_resolution else val
    if q == 3:
        grid = _fibonacci_sphere(points)
        heights = np.max(dirs @ grid.T, axis=0)
        idx = int(np.argmin(heights))
        val = float(heights[idx])
        center = grid[idx]
        spacing = math.sqrt(4.0 * math.pi / points)
        for _ in range(zoom_stages):
            radius = 3.0 * spacing
            local = _local_cap_grid(center, radius, 200_000)
            heights = np.max(dirs @ local.T, axis=0)
            j = int(np.argmin(heights))
            if heights[j] < val:
                val = float(heights[j])
                center = local[j]
            spacing = radius * math.sqrt(math.pi / 200_000)
        return (val, spacing) if return_resolution else val
    raise ValueError(f"grid oracle supports q <= 3, got q={q}")


def _local_cap_grid(center: np.ndarray, radius: float, count: int) -> np.ndarray:
    """Roughly uniform lattice on the spherical cap around `center`."""
    b1 = np.zeros(3)
    b1[int(np.argmin(np.abs(center)))] = 1.0
    b1 -= (b1 @ center) * center
    b1 /= np.linalg.norm(b1)
    b2 = np.cross(center, b1)
    side = int(math.sqrt(count))
    u = np.linspace(-radius, radius, side)
    uu, vv = np.meshgrid(u, u)
    pts = center[None, :] + uu.reshape(-1, 1) * b1 + vv.reshape(-1, 1) * b2
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return pts


def restricted_cosine_measure(frame: SubspaceFrame, images: DirectionSet,
                              rng: np.random.Generator | None = None,
                              grid_check: bool | None = None) -> float:
    """Cosine measure of embedded directions restricted to the frame's range.

    Range vectors are written as columns @ s, which pulls the optimization
    back to R^p: the effective directions are the frame-transposed images,
    renormalized (their norms already equal 1 up to float error).
    """
    if images.ambient_dim != frame.n:
        raise ValueError("images must live in the frame's ambient space")
    pulled = images.directions @ frame.columns
    pulled = pulled / np.linalg.norm(pulled, axis=1, keepdims=True)
    return cosine_measure(DirectionSet(pulled, tag="pss_subspace"), rng=rng,
                          grid_check=grid_check)


# ---------------------------------------------------------------------------
# alignment

def empirical_min_alignment(frame_sampler, v: np.ndarray, trials: int,
                            alpha_q: float, rng: np.random.Generator) -> float:
    """Fraction of sampled frames whose scaled transpose keeps at least an
    alpha_q share of the norm of v: ||Q^T v|| >= alpha_q ||v||."""
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        raise ValueError("alignment is undefined for the zero vector")
    if trials < 1:
        raise ValueError("need at least one trial")
    hits = 0
    for _ in range(trials):
        frame = frame_sampler(rng)
        if np.linalg.norm(frame.embedding().T @ v) >= alpha_q * nv:
            hits += 1
    return hits / trials
