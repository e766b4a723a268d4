"""Angle regions of the n-collision chain and their weighted volumes.

With x_i = cos(alpha_i) the radii are r_i = r0 / (x_1 ... x_i).  The
emitted velocity must lie in the shell c <= r_n <= R (region W); W1 is
the part where r_k < c/D for k = floor(beta n) + 1, W2 the rest of W.
Weighted volumes are integrals of prod sin(alpha_i) over a region, i.e.
plain volumes in x-space, and in y_i = -log(x_i) the region W is a
difference of two simplices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidArgument
from .rng import chunk_generator, chunk_sizes

MC_CHUNK = 1 << 16
DEFAULT_BETA = 0.25


def choose_D(beta: float) -> float:
    """D = 1 + pi 5.4^(1/beta), so that ((D - 1)/pi)^beta = 5.4 > 2 (2.7)."""
    if not 0.0 < beta < 1.0:
        raise InvalidArgument(f"beta must lie in (0, 1), got {beta}")
    return 1.0 + math.pi * 5.4 ** (1.0 / beta)


@dataclass(frozen=True)
class RegionParams:
    r0: float
    c: float
    R: float
    n: int
    beta: float = DEFAULT_BETA
    D: float = field(default=None)

    def __post_init__(self):
        if self.D is None:
            object.__setattr__(self, "D", choose_D(self.beta))
        if not self.r0 > 0:
            raise InvalidArgument("r0 must be > 0")
        if not 0 < self.c < self.R:
            raise InvalidArgument("need 0 < c < R")
        if self.n < 1:
            raise InvalidArgument("n must be >= 1")
        if not 0.0 < self.beta < 1.0:
            raise InvalidArgument("beta must lie in (0, 1)")
        if not self.D > 1.0:
            raise InvalidArgument("D must be > 1")

    @property
    def k(self) -> int:
        return int(math.floor(self.beta * self.n)) + 1


def _cos(alphas) -> np.ndarray:
    alphas = np.asarray(alphas, dtype=float)
    if np.any(alphas < 0) or np.any(alphas >= np.pi / 2):
        raise InvalidArgument("angles must lie in [0, pi/2)")
    return np.cos(alphas)


def radii_from_cos(x: np.ndarray, r0: float) -> np.ndarray:
    """r_1..r_n for cosines x of shape (..., n)."""
    return r0 / np.cumprod(x, axis=-1)


def in_W_cos(x, rp: RegionParams) -> np.ndarray:
    rn = rp.r0 / np.prod(x, axis=-1)
    return (rn >= rp.c) & (rn <= rp.R)


def in_W1_cos(x, rp: RegionParams) -> np.ndarray:
    rk = rp.r0 / np.prod(np.asarray(x)[..., : rp.k], axis=-1)
    return in_W_cos(x, rp) & (rk < rp.c / rp.D)


def in_W2_cos(x, rp: RegionParams) -> np.ndarray:
    return in_W_cos(x, rp) & ~in_W1_cos(x, rp)


def in_W(alphas, rp: RegionParams):
    """c <= r0 / prod cos(alpha_i) <= R."""
    return in_W_cos(_cos(alphas), rp)


def in_W1(alphas, rp: RegionParams):
    """In W and r_k < c/D (a tie r_k = c/D belongs to W2)."""
    return in_W1_cos(_cos(alphas), rp)


def in_W2(alphas, rp: RegionParams):
    return in_W2_cos(_cos(alphas), rp)


def vol_W_weighted_bound(rp: RegionParams) -> float:
    """(1/n!) (r0/c) log^n(R/r0), valid for r0 < c/2."""
    if not rp.r0 < rp.c / 2:
        raise InvalidArgument("the W volume bound needs r0 < c/2")
    return (rp.r0 / rp.c) * math.log(rp.R / rp.r0) ** rp.n / math.factorial(rp.n)


def vol_simplex_difference_exact(rp: RegionParams) -> float:
    """Volume of {log(c/r0) <= sum y_i <= log(R/r0), y_i >= 0}."""
    if not rp.r0 < rp.c:
        raise InvalidArgument("the simplex difference needs r0 < c")
    n = rp.n
    return (math.log(rp.R / rp.r0) ** n - math.log(rp.c / rp.r0) ** n) / math.factorial(n)


def vol_W2_bound(rp: RegionParams) -> float:
    """(1/n!) (r0/c) sum_{j=1..k} C(n, k-j) log(RD/c)^(n-k+j) log(c/(D r0))^(k-j).

    Needs r0 < c/(2D) so that both logarithms are positive.
    """
    if not rp.r0 < rp.c / (2.0 * rp.D):
        raise InvalidArgument("the W2 volume bound needs r0 < c/(2D)")
    n, k = rp.n, rp.k
    A = math.log(rp.R * rp.D / rp.c)
    B = math.log(rp.c / (rp.D * rp.r0))
    total = sum(math.comb(n, k - j) * A ** (n - k + j) * B ** (k - j) for j in range(1, k + 1))
    return (rp.r0 / rp.c) * total / math.factorial(n)


def _mc_counts(predicates, n: int, samples: int, seed: int, chunk: int = MC_CHUNK):
    """Acceptance counts of several cosine-space predicates on one sample stream."""
    counts = np.zeros(len(predicates), dtype=np.int64)
    for idx, size in enumerate(chunk_sizes(samples, chunk)):
        x = 1.0 - chunk_generator(seed, idx).random((size, n))  # in (0, 1]
        for p, pred in enumerate(predicates):
            counts[p] += int(np.count_nonzero(pred(x)))
    return counts


def _estimate(count: int, samples: int):
    p = count / samples
    return p, math.sqrt(p * (1.0 - p) / samples)


def mc_weighted_volume(predicate: Callable, n: int, rp: RegionParams | None, samples: int,
                       seed: int = 0, space: str = "alpha") -> tuple[float, float]:
    """Monte Carlo estimate of the integral of prod sin(alpha_i) over a region.

    cos(alpha_i) are drawn uniform on (0, 1], so the estimate is the
    acceptance fraction.  ``predicate`` takes angles (``space="alpha"``) or
    cosines (``space="cos"``) of shape (samples, n).
    """
    if samples < 1000:
        raise InvalidArgument("use at least 1000 samples")
    if space == "alpha":
        pred = lambda x: predicate(np.arccos(x))  # noqa: E731
    elif space == "cos":
        pred = predicate
    else:
        raise InvalidArgument("space must be 'alpha' or 'cos'")
    (count,) = _mc_counts([pred], n, samples, seed)
    return _estimate(int(count), samples)


def mc_region_split(rp: RegionParams, samples: int, seed: int = 0) -> dict:
    """W, W1 and W2 weighted volumes from one sample stream (counts add exactly)."""
    preds = [lambda x: in_W_cos(x, rp), lambda x: in_W1_cos(x, rp), lambda x: in_W2_cos(x, rp)]
    counts = _mc_counts(preds, rp.n, samples, seed)
    out = {}
    for name, cnt in zip(("W", "W1", "W2"), counts):
        est, err = _estimate(int(cnt), samples)
        out[name] = {"count": int(cnt), "estimate": est, "stderr": err}
    out["samples"] = samples
    return out


def mc_simplex_difference(rp: RegionParams, samples: int, seed: int = 0) -> tuple[float, float]:
    """Volume of the y-space shell by uniform sampling of the box [0, log(R/r0)]^n."""
    L = math.log(rp.R / rp.r0)
    lo = math.log(rp.c / rp.r0)
    hits = 0
    for idx, size in enumerate(chunk_sizes(samples, MC_CHUNK)):
        y = L * chunk_generator(seed, idx).random((size, rp.n))
        s = y.sum(axis=1)
        hits += int(np.count_nonzero((s >= lo) & (s <= L)))
    p, err = _estimate(hits, samples)
    return L ** rp.n * p, L ** rp.n * err


def jacobian_within_bound(x: np.ndarray, rp: RegionParams) -> np.ndarray:
    """For cosines in W: exp(-sum y_i) = prod x_i <= r0/c."""
    return np.prod(x, axis=-1) <= rp.r0 / rp.c * (1.0 + 1e-12)
