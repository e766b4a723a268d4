"""The k-integrals J^{l,m}(a; b) of products of forward and return rates.

    J^{l,m} = int_R  prod a_i prod b_j / (prod (ik + a_i) prod (b_j - ik)) dk

Residues give J^{1,1}(a, b) = 2 pi ab/(a + b).  The recursion
J^{l,m} = a_l/(a_l+b_m) J^{l-1,m} + b_m/(a_l+b_m) J^{l,m-1} with
J^{0,s} = J^{s,0} = 0 (s > 1) then fixes everything else.  The base value is
not hard-coded: ``JNormalization.measure`` obtains kappa = J^{1,1}(1, 1) from
the quadrature oracle, and bounds built on the convention J^{1,1}(1,1) =
1/(4 pi) are rescaled by ``JNormalization.ratio``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import DivergentIntegral, InvalidArgument, QuadratureFailure
from .quadrature import QuadratureSpec

# J^{1,1}(1,1) under the convention J^{1,1}(a,b) = (1/2pi) ab/(a+b)
CONVENTIONAL_J11 = 1.0 / (4.0 * math.pi)


@dataclass(frozen=True)
class RateParams:
    """Forward rates ``a`` (xi^1 > 0) and return rates ``b`` (xi^1 < 0)."""

    a: tuple
    b: tuple

    def __init__(self, a: Sequence[float] = (), b: Sequence[float] = ()):
        a = tuple(float(x) for x in a)
        b = tuple(float(x) for x in b)
        for x in a + b:
            if not (math.isfinite(x) and x > 0):
                raise InvalidArgument(f"rates must be finite and > 0, got {x}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def l(self) -> int:
        return len(self.a)

    @property
    def m(self) -> int:
        return len(self.b)


def rate(xi, c: float) -> float:
    """pi |xi - c| / |xi^1|, the collision rate per unit distance in x."""
    xi = np.asarray(xi, dtype=float)
    r = math.sqrt((xi[0] + c) ** 2 + xi[1] ** 2 + xi[2] ** 2)
    return math.pi * r / abs(xi[0])


def j_quadrature(rates: RateParams, quad: QuadratureSpec | None = None) -> float:
    """Direct numerical evaluation of J^{l,m}; k = tan(theta) maps R onto (-pi/2, pi/2)."""
    quad = quad or QuadratureSpec(relative_tolerance=1e-12, absolute_tolerance=1e-14)
    if rates.l + rates.m < 2:
        raise DivergentIntegral("J needs l + m >= 2 for the k-integral to converge")
    a = np.array(rates.a)
    b = np.array(rates.b)
    num = float(np.prod(a) * np.prod(b))

    def integrand(theta):
        k = math.tan(theta)
        den = np.prod(1j * k + a) * np.prod(b - 1j * k)
        return num / den * (1.0 + k * k)

    opts = dict(epsabs=quad.absolute_tolerance, epsrel=quad.relative_tolerance, limit=2000)
    h = math.pi / 2
    with warnings.catch_warnings():
        # roundoff warnings are expected when the true value is 0; checked below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        scale, _ = integrate.quad(lambda t: abs(integrand(t)), -h, h, **opts)
        re, re_err = integrate.quad(lambda t: integrand(t).real, -h, h, **opts)
        im, im_err = integrate.quad(lambda t: integrand(t).imag, -h, h, **opts)
    if not quad.accepts(re, re_err) and re_err > 1e-12 * scale:
        raise QuadratureFailure("J quadrature did not converge", re, re_err)
    # the integral is real: the imaginary part is odd in k and cancels
    if abs(im) > 1e-8 * max(abs(re), 1e-300) and abs(im) > 1e-10 * scale:
        raise QuadratureFailure("J quadrature left an imaginary residue", complex(re, im), im_err)
    return re


@dataclass(frozen=True)
class JNormalization:
    """kappa = J^{1,1}(1, 1) as measured by the quadrature oracle."""

    kappa: float

    @classmethod
    def measure(cls, quad: QuadratureSpec | None = None) -> "JNormalization":
        return cls(j_quadrature(RateParams([1.0], [1.0]), quad))

    @property
    def ratio(self) -> float:
        """Factor by which constants derived with J^{1,1}(1,1) = 1/(4 pi) must grow."""
        return self.kappa / CONVENTIONAL_J11

    def report(self) -> dict:
        return {
            "kappa_measured": self.kappa,
            "kappa_conventional": CONVENTIONAL_J11,
            "ratio": self.ratio,
            "ratio_over_2pi_squared": self.ratio / (2.0 * math.pi) ** 2,
        }


def j_table(a: Sequence[float], b: Sequence[float], kappa: float) -> np.ndarray:
    """Table D[i, j] = J over the first i entries of ``a`` and first j of ``b``."""
    la, mb = len(a), len(b)
    D = np.zeros((la + 1, mb + 1))
    for i in range(1, la + 1):
        ai = a[i - 1]
        for j in range(1, mb + 1):
            bj = b[j - 1]
            if i == 1 and j == 1:
                D[1, 1] = kappa * 2.0 * ai * bj / (ai + bj)
            else:
                D[i, j] = ai / (ai + bj) * D[i - 1, j] + bj / (ai + bj) * D[i, j - 1]
    return D


def j_recursive(rates: RateParams, norm: JNormalization) -> float:
    """J^{l,m} from the two-term recursion, memoized over prefixes (O(l m))."""
    if rates.l == 0 or rates.m == 0:
        raise InvalidArgument("the recursion needs at least one forward and one return rate")
    return float(j_table(rates.a, rates.b, norm.kappa)[rates.l, rates.m])


def j_pair(a: float, b: float, norm: JNormalization) -> float:
    """J^{1,1}(a, b) = 2 kappa ab / (a + b)."""
    return norm.kappa * 2.0 * a * b / (a + b)


def j_upper_bound(A: float, B: float, k: int, l: int, m: int, norm: JNormalization) -> float:
    """2 kappa B^k (1 + 1/A)^{l+m}: bound on J^{l,m} when every a_i > A and
    at least k of the b_j are below B (k >= 1)."""
    if k < 1 or k > m:
        raise InvalidArgument(f"need 1 <= k <= m, got k={k}, m={m}")
    if A <= 0 or B <= 0:
        raise InvalidArgument("A and B must be > 0")
    return 2.0 * norm.kappa * B ** k * (1.0 + 1.0 / A) ** (l + m)


def j_pair_max(rates: RateParams, norm: JNormalization) -> float:
    """max over (i, j) of J^{1,1}(a_i, b_j), which dominates J^{l,m}."""
    return max(j_pair(a, b, norm) for a in rates.a for b in rates.b)
