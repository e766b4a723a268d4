"""Quadrature plumbing: tolerance spec, cached rules and a refinement driver."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import InvalidArgument, QuadratureFailure


@dataclass(frozen=True)
class QuadratureSpec:
    """Accuracy target and budget for a quadrature.

    ``truncation_radius`` caps how far from a distribution's centre improper
    integrals are carried; ``inf`` defers to the distribution's own cutoff.
    """

    relative_tolerance: float = 1e-8
    absolute_tolerance: float = 1e-14
    max_evaluations: int = 200_000_000
    truncation_radius: float = math.inf

    def __post_init__(self):
        if not (self.relative_tolerance > 0 and self.absolute_tolerance > 0):
            raise InvalidArgument("quadrature tolerances must be > 0")
        if self.max_evaluations <= 0:
            raise InvalidArgument("max_evaluations must be > 0")
        if not self.truncation_radius > 0:
            raise InvalidArgument("truncation_radius must be > 0")

    def accepts(self, value: float, error: float) -> bool:
        return error <= max(self.absolute_tolerance, self.relative_tolerance * abs(value))


@lru_cache(maxsize=256)
def _gl_unit(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int, a: float, b: float):
    """Nodes and weights of the n-point Gauss-Legendre rule on [a, b]."""
    x, w = _gl_unit(int(n))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


@lru_cache(maxsize=64)
def _gh_unit(n: int):
    x, w = np.polynomial.hermite_e.hermegauss(n)
    return x, w / math.sqrt(2.0 * math.pi)


def gauss_hermite_normal(n: int):
    """Nodes/weights with sum(w f(x)) ~ E[f(Z)], Z standard normal."""
    return _gh_unit(int(n))


def periodic_nodes(n: int, offset: float = 0.0):
    """Trapezoid rule on a full period [offset, offset + 2 pi)."""
    phi = offset + 2.0 * np.pi * np.arange(n) / n
    return phi, np.full(n, 2.0 * np.pi / n)


def refine(evaluate: Callable[[int], tuple[float, int]], spec: QuadratureSpec,
           levels: int = 7, what: str = "integral") -> tuple[float, float]:
    """Run ``evaluate(level)`` for level = 0, 1, ... until successive values agree.

    ``evaluate`` returns (value, evaluations used).  The error estimate is the
    difference between the last two levels, which overstates the error of the
    finer one.  Raises QuadratureFailure with the best estimate when the
    tolerance is not met within ``levels`` refinements or the evaluation budget.
    """
    used = 0
    prev = None
    value = 0.0
    err = math.inf
    for level in range(levels):
        value, n = evaluate(level)
        used += n
        if prev is not None:
            err = abs(value - prev)
            if spec.accepts(value, err):
                return value, err
        if used > spec.max_evaluations:
            break
        prev = value
    raise QuadratureFailure(f"{what} did not converge", value, err)


def level_points(base: int, level: int) -> int:
    """Node count growing by about 1.5x per refinement level."""
    return int(math.ceil(base * 1.5 ** level))
