"""Sums-of-squares test objectives, stochastic noise wrappers, and the
instance registry.

Every smooth objective is f(x) = sum_i r_i(x)^2 for a residual map r, which
is what the two noise wrappers act on: additive noise perturbs each residual
by an independent zero-mean draw before squaring (biasing the mean value by
m*sigma^2, a constant that does not move the minimizer), multiplicative
noise rescales the exact value by (1 + theta) and is unbiased.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

__all__ = [
    "SmoothProblem",
    "NoiseModel",
    "NoisyProblem",
    "BoxBounds",
    "always_feasible",
    "make_smooth",
    "make_instance",
    "get_instance",
    "instance_name",
    "default_suite",
    "FAMILIES",
    "DESK_DIMS",
    "PAPER_LIKE_DIMS",
]


def always_feasible(x) -> bool:
    return True


@dataclass(frozen=True)
class BoxBounds:
    """Axis-aligned box feasibility predicate."""

    lo: float
    hi: float

    def __call__(self, x) -> bool:
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))


@dataclass(eq=False)
class SmoothProblem:
    name: str
    dim: int
    residual_count: int
    residuals: callable
    x0: np.ndarray
    known_fmin: float | None = None
    feasible: callable = always_feasible

    def f_true(self, x) -> float:
        r = self.residuals(np.asarray(x, dtype=float))
        return float(r @ r)


@dataclass(frozen=True)
class NoiseModel:
    kind: str  # "additive" | "multiplicative"
    dist: str  # "uniform" | "normal"
    sigma: float

    def __post_init__(self):
        if self.kind not in ("additive", "multiplicative"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.dist not in ("uniform", "normal"):
            raise ValueError(f"unknown noise distribution {self.dist!r}")
        if not self.sigma > 0:
            raise ValueError("noise sigma must be positive")

    def draw(self, rng: np.random.Generator, size=None) -> np.ndarray:
        # both distributions have mean 0 and standard deviation sigma
        if self.dist == "uniform":
            half = math.sqrt(3.0) * self.sigma
            return rng.uniform(-half, half, size=size)
        return rng.normal(0.0, self.sigma, size=size)


@dataclass(eq=False)
class NoisyProblem:
    base: SmoothProblem
    noise: NoiseModel
    name: str = ""

    def __post_init__(self):
        if not self.name:
            self.name = self.base.name

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def x0(self) -> np.ndarray:
        return self.base.x0

    def feasible(self, x) -> bool:
        return self.base.feasible(x)

    def f_true(self, x) -> float:
        return self.base.f_true(x)

    def eval_noisy(self, x, rng: np.random.Generator) -> float:
        return float(self.sample_noisy(x, 1, rng)[0])

    def sample_noisy(self, x, count: int, rng: np.random.Generator) -> np.ndarray:
        """`count` independent noisy values at x, in one stream-ordered block."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.base.dim,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.base.dim},)")
        if self.noise.kind == "additive":
            r = self.base.residuals(x)
            theta = self.noise.draw(rng, size=(count, r.shape[0]))
            return np.einsum("ij,ij->i", r + theta, r + theta)
        f = self.base.f_true(x)
        return f * (1.0 + self.noise.draw(rng, size=count))


def eval_true(problem: SmoothProblem, x) -> float:
    return problem.f_true(x)


def eval_noisy(problem: NoisyProblem, x, rng: np.random.Generator) -> float:
    return problem.eval_noisy(x, rng)


# ---------------------------------------------------------------------------
# residual families (classical extended sums-of-squares test set)

def _ext_rosenbrock(x):
    even = x[0::2]
    odd = x[1::2]
    return np.concatenate([10.0 * (odd - even**2), 1.0 - even])


def _ext_powell(x):
    a = x[0::4]
    b = x[1::4]
    c = x[2::4]
    d = x[3::4]
    return np.concatenate([
        a + 10.0 * b,
        math.sqrt(5.0) * (c - d),
        (b - 2.0 * c) ** 2,
        math.sqrt(10.0) * (a - d) ** 2,
    ])


def _trigonometric(x):
    n = x.shape[0]
    cos_sum = np.cos(x).sum()
    i = np.arange(1, n + 1)
    return n - cos_sum + i * (1.0 - np.cos(x)) - np.sin(x)


def _broyden_tridiagonal(x):
    xm = np.concatenate([[0.0], x[:-1]])
    xp = np.concatenate([x[1:], [0.0]])
    return (3.0 - 2.0 * x) * x - xm - 2.0 * xp + 1.0


def _discrete_boundary(x):
    n = x.shape[0]
    h = 1.0 / (n + 1)
    t = np.arange(1, n + 1) * h
    xm = np.concatenate([[0.0], x[:-1]])
    xp = np.concatenate([x[1:], [0.0]])
    return 2.0 * x - xm - xp + h**2 * (x + t + 1.0) ** 3 / 2.0


def _penalty1(x):
    a = math.sqrt(1e-5)
    return np.concatenate([a * (x - 1.0), [x @ x - 0.25]])


def _variably_dimensioned(x):
    n = x.shape[0]
    j = np.arange(1, n + 1)
    s = float(j @ (x - 1.0))
    return np.concatenate([x - 1.0, [s, s * s]])


def _chained_wood(x):
    # overlapping 4-variable wood blocks starting at 0, 2, 4, ...
    j = np.arange(0, x.shape[0] - 3, 2)
    x1, x2, x3, x4 = x[j], x[j + 1], x[j + 2], x[j + 3]
    return np.concatenate([
        10.0 * (x2 - x1**2),
        1.0 - x1,
        math.sqrt(90.0) * (x4 - x3**2),
        1.0 - x3,
        math.sqrt(10.0) * (x2 + x4 - 2.0),
        (x2 - x4) / math.sqrt(10.0),
    ])


def _sphere(x):
    return x.copy()


def _x0_rosenbrock(n):
    x0 = np.empty(n)
    x0[0::2] = -1.2
    x0[1::2] = 1.0
    return x0


def _x0_powell(n):
    return np.tile([3.0, -1.0, 0.0, 1.0], n // 4)


def _x0_chained_wood(n):
    x0 = np.empty(n)
    x0[0::2] = -3.0
    x0[1::2] = -1.0
    return x0


def _x0_boundary(n):
    t = np.arange(1, n + 1) / (n + 1)
    return t * (t - 1.0)


@dataclass(frozen=True)
class _Family:
    residuals: callable
    x0: callable
    m_of_n: callable
    dim_ok: callable
    known_fmin: float | None
    minimizer: callable | None = None  # exact global minimizer when known


FAMILIES: dict[str, _Family] = {
    "ext_rosenbrock": _Family(_ext_rosenbrock, _x0_rosenbrock, lambda n: n,
                              lambda n: n >= 2 and n % 2 == 0, 0.0,
                              lambda n: np.ones(n)),
    "ext_powell": _Family(_ext_powell, _x0_powell, lambda n: n,
                          lambda n: n >= 4 and n % 4 == 0, 0.0,
                          lambda n: np.zeros(n)),
    "trigonometric": _Family(_trigonometric, lambda n: np.full(n, 1.0 / n),
                             lambda n: n, lambda n: n >= 1, 0.0),
    "broyden_tridiag": _Family(_broyden_tridiagonal, lambda n: np.full(n, -1.0),
                               lambda n: n, lambda n: n >= 1, 0.0),
    "disc_boundary": _Family(_discrete_boundary, _x0_boundary,
                             lambda n: n, lambda n: n >= 1, 0.0),
    "penalty1": _Family(_penalty1, lambda n: np.arange(1.0, n + 1.0),
                        lambda n: n + 1, lambda n: n >= 1, None),
    "vardim": _Family(_variably_dimensioned, lambda n: 1.0 - np.arange(1, n + 1) / n,
                      lambda n: n + 2, lambda n: n >= 1, 0.0,
                      lambda n: np.ones(n)),
    "chained_wood": _Family(_chained_wood, _x0_chained_wood,
                            lambda n: 3 * (n - 2), lambda n: n >= 4 and n % 2 == 0,
                            0.0, lambda n: np.ones(n)),
    # convenience quadratic, not part of the benchmark suite
    "sphere": _Family(_sphere, lambda n: np.full(n, 2.0), lambda n: n,
                      lambda n: n >= 1, 0.0, lambda n: np.zeros(n)),
}

_SUITE_FAMILIES = [
    "ext_rosenbrock", "ext_powell", "trigonometric", "broyden_tridiag",
    "disc_boundary", "penalty1", "vardim", "chained_wood",
]

DESK_DIMS = (8, 16, 32, 64)
PAPER_LIKE_DIMS = (100, 120)

_KIND_CODE = {"additive": "add", "multiplicative": "mult"}
_CODE_KIND = {v: k for k, v in _KIND_CODE.items()}


def make_smooth(family: str, n: int) -> SmoothProblem:
    if family not in FAMILIES:
        raise KeyError(f"unknown problem family {family!r}")
    fam = FAMILIES[family]
    if not fam.dim_ok(n):
        raise ValueError(f"family {family!r} does not admit dimension {n}")
    return SmoothProblem(
        name=f"{family}_n{n}",
        dim=n,
        residual_count=fam.m_of_n(n),
        residuals=fam.residuals,
        x0=fam.x0(n),
        known_fmin=fam.known_fmin,
    )


def instance_name(family: str, n: int, kind: str, dist: str) -> str:
    return f"{family}_n{n}_{_KIND_CODE[kind]}_{dist}"


def make_instance(family: str, n: int, kind: str, dist: str,
                  sigma: float = 1e-3) -> NoisyProblem:
    base = make_smooth(family, n)
    noise = NoiseModel(kind=kind, dist=dist, sigma=sigma)
    return NoisyProblem(base=base, noise=noise,
                        name=instance_name(family, n, kind, dist))


def get_instance(name: str, sigma: float = 1e-3) -> NoisyProblem:
    """Resolve a registry name like ``ext_rosenbrock_n8_add_normal``."""
    parts = name.split("_")
    if len(parts) < 4:
        raise KeyError(f"malformed instance name {name!r}")
    dist = parts[-1]
    code = parts[-2]
    ntok = parts[-3]
    family = "_".join(parts[:-3])
    if dist not in ("uniform", "normal") or code not in _CODE_KIND \
            or not ntok.startswith("n") or not ntok[1:].isdigit():
        raise KeyError(f"malformed instance name {name!r}")
    return make_instance(family, int(ntok[1:]), _CODE_KIND[code], dist, sigma=sigma)


def default_suite(scale: str = "desk", sigma: float = 1e-3) -> list[NoisyProblem]:
    """The benchmark suite: every family at every admissible dimension of the
    scale, crossed with both noise kinds and both noise distributions."""
    if scale == "desk":
        dims = DESK_DIMS
    elif scale == "paper-like":
        dims = PAPER_LIKE_DIMS
    else:
        raise ValueError(f"unknown suite scale {scale!r}")
    suite = []
    for family in _SUITE_FAMILIES:
        for n in dims:
            if not FAMILIES[family].dim_ok(n):
                continue
            for kind in ("additive", "multiplicative"):
                for dist in ("uniform", "normal"):
                    suite.append(make_instance(family, n, kind, dist, sigma=sigma))
    return suite
