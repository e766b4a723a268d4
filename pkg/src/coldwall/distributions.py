"""Velocity distributions used as test functions and as emitted profiles.

``TestDistribution`` wraps a vectorized density together with the geometric
hints quadratures need (a centre and the radius holding its mass).
``OutgoingDistribution`` is a profile f+ emitted by the wall, supported in
{xi^1 > 0, |xi - c| < R}, with its mass flux and a flux-weighted sampler.
"""

from __future__ import annotations

import ast
import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidArgument
from .geometry import ProblemParams
from .quadrature import QuadratureSpec, gauss_legendre, level_points, periodic_nodes, refine

GAUSS_CUTOFF = 8.0  # standard deviations kept for Gaussian tails


@dataclass(frozen=True)
class TestDistribution:
    """Nonnegative density on R^3.

    ``support_radius`` is the radius around ``center`` outside which the
    density vanishes (``inf`` for Gaussians); ``reach`` is the radius that
    quadratures actually cover.
    """

    __test__ = False  # not a pytest class

    evaluate: Callable[[np.ndarray], np.ndarray]
    support_radius: float
    description: str
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    scale: float = 1.0
    is_zero: bool = False
    # radius of the ball on which the density is constant (exact disk rule), if any
    flat_ball: float | None = None

    @property
    def reach(self) -> float:
        if math.isfinite(self.support_radius):
            return self.support_radius
        return GAUSS_CUTOFF * self.scale

    def __call__(self, xi) -> np.ndarray:
        return self.evaluate(np.asarray(xi, dtype=float))


def gauss(center=(0.0, 0.0, 0.0), width: float = 1.0, mass: float = 1.0) -> TestDistribution:
    """Isotropic Gaussian of total mass ``mass`` and standard deviation ``width``."""
    center = np.asarray(center, dtype=float)
    if width <= 0:
        raise InvalidArgument("Gaussian width must be > 0")
    norm = mass / (2.0 * np.pi * width * width) ** 1.5

    def evaluate(xi):
        d = xi - center
        return norm * np.exp(-np.sum(d * d, axis=-1) / (2.0 * width * width))

    return TestDistribution(evaluate, math.inf, f"gauss({center.tolist()},{width})", center, width,
                            is_zero=(mass == 0))


def maxwellian(theta: float, mass: float = 1.0) -> TestDistribution:
    """Centred Maxwellian with temperature ``theta`` (variance per component)."""
    return gauss((0.0, 0.0, 0.0), math.sqrt(theta), mass)


def disk(radius: float, center=(0.0, 0.0, 0.0), height: float = 1.0) -> TestDistribution:
    """Indicator (times ``height``) of the ball of given radius.

    Its trace on any plane through ``center`` is the disk of that radius, which
    is how it serves as the in-plane disk for plane integrals.
    """
    center = np.asarray(center, dtype=float)
    if radius <= 0:
        raise InvalidArgument("disk radius must be > 0")

    def evaluate(xi):
        d = xi - center
        return np.where(np.sum(d * d, axis=-1) <= radius * radius, height, 0.0)

    return TestDistribution(evaluate, radius, f"disk({radius})", center, radius, flat_ball=radius)


def shellcap_test(c: float, R: float, height: float = 1.0) -> TestDistribution:
    """Indicator of {xi^1 > 0, c < |xi - c| < R} as a plain test function."""
    beam = np.array([-c, 0.0, 0.0])

    def evaluate(xi):
        r = np.linalg.norm(xi - beam, axis=-1)
        return np.where((xi[..., 0] > 0) & (r > c) & (r < R), height, 0.0)

    return TestDistribution(evaluate, R, f"shellcap({c},{R})", beam, R - c)


def zero() -> TestDistribution:
    return TestDistribution(lambda xi: np.zeros(np.shape(xi)[:-1]), 1.0, "zero", is_zero=True)


def combine(terms) -> TestDistribution:
    """Linear combination sum(coef * dist) as one density (coefficients >= 0)."""
    terms = [(float(a), d) for a, d in terms]
    if any(a < 0 for a, _ in terms):
        raise InvalidArgument("combination coefficients must be >= 0")
    centers = np.array([d.center for _, d in terms])
    center = centers.mean(axis=0)
    reach = max(np.linalg.norm(d.center - center) + d.reach for _, d in terms)
    scale = min(d.scale for _, d in terms)

    def evaluate(xi):
        return sum(a * d.evaluate(xi) for a, d in terms)

    desc = " + ".join(f"{a}*{d.description}" for a, d in terms)
    return TestDistribution(evaluate, reach, desc, center, scale)


_CATALOG = {"gauss": gauss, "disk": disk, "shellcap": shellcap_test, "maxwellian": maxwellian}
_SPEC_RE = re.compile(r"^\s*([a-z_]+)\s*\((.*)\)\s*$")


def from_spec(spec: str) -> TestDistribution:
    """Build a catalog distribution from text such as ``gauss((1,0,0),0.5)``."""
    m = _SPEC_RE.match(spec)
    if not m or m.group(1) not in _CATALOG:
        raise InvalidArgument(f"unknown test distribution {spec!r}; catalog: {sorted(_CATALOG)}")
    try:
        args = ast.literal_eval("(" + m.group(2) + ",)") if m.group(2).strip() else ()
    except (ValueError, SyntaxError) as exc:
        raise InvalidArgument(f"cannot parse arguments of {spec!r}") from exc
    return _CATALOG[m.group(1)](*args)


class OutgoingDistribution:
    """Emitted profile f+ on {xi^1 > 0, |xi - c| < R} bounded by ``amplitude``."""

    def __init__(self, name: str, params: ProblemParams, density: Callable[[np.ndarray], np.ndarray],
                 amplitude: float, options: dict | None = None, flux_tol: float = 1e-6):
        if not 0 <= amplitude <= params.M:
            raise InvalidArgument(f"amplitude {amplitude} must lie in [0, M={params.M}]")
        self.name = name
        self.params = params
        self.amplitude = float(amplitude)
        self.options = dict(options or {})
        self._density = density
        self.total_flux = self._compute_flux(flux_tol) if amplitude > 0 else 0.0

    @property
    def M(self) -> float:
        return self.params.M

    def in_support(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        r = np.linalg.norm(xi - self.params.beam, axis=-1)
        return (xi[..., 0] > 0) & (r < self.params.R)

    def evaluate(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if self.amplitude == 0:
            return np.zeros(xi.shape[:-1])
        return np.where(self.in_support(xi), self._density(xi), 0.0)

    __call__ = evaluate

    def describe(self) -> dict:
        return {"name": self.name, "amplitude": self.amplitude, **self.options}

    def _compute_flux(self, tol: float) -> float:
        c, R = self.params.c, self.params.R
        beam = self.params.beam

        def level(k):
            nr = level_points(24, k)
            nx = level_points(24, k)
            nphi = level_points(16, k)
            r, wr = gauss_legendre(nr, c, R)
            t, wt = gauss_legendre(nx, 0.0, 1.0)
            phi, wphi = periodic_nodes(nphi)
            lo = c / r
            x = lo[:, None] + (1.0 - lo)[:, None] * t[None, :]  # cos of angle to +x
            wx = (1.0 - lo)[:, None] * wt[None, :]
            s = np.sqrt(1.0 - x * x)
            xi = np.empty((nr, nx, nphi, 3))
            xi[..., 0] = beam[0] + r[:, None, None] * x[..., None]
            xi[..., 1] = r[:, None, None] * s[..., None] * np.cos(phi)
            xi[..., 2] = r[:, None, None] * s[..., None] * np.sin(phi)
            integrand = np.maximum(xi[..., 0], 0.0) * self.evaluate(xi)
            w = (r * r * wr)[:, None, None] * wx[..., None] * wphi[None, None, :]
            return float(np.sum(w * integrand)), integrand.size

        value, _ = refine(level, QuadratureSpec(relative_tolerance=tol, absolute_tolerance=1e-300),
                          levels=9, what="total flux")
        return value

    def propose(self, u: np.ndarray):
        """Map uniforms (S, 4) to proposals and acceptance flags.

        Proposals are uniform in volume on the shell c < |xi - c| < R inside
        the cone xi^1 > 0; acceptance probability xi^1 f+(xi) / ((R - c) A).
        """
        c, R = self.params.c, self.params.R
        r = np.cbrt(c ** 3 + u[:, 0] * (R ** 3 - c ** 3))
        x = c / R + u[:, 1] * (1.0 - c / R)
        phi = 2.0 * np.pi * u[:, 2]
        s = np.sqrt(1.0 - x * x)
        xi = np.stack([-c + r * x, r * s * np.cos(phi), r * s * np.sin(phi)], axis=-1)
        target = np.maximum(xi[:, 0], 0.0) * self.evaluate(xi)
        accept = u[:, 3] * ((R - c) * self.amplitude) < target
        return xi, accept

    def flux_sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` velocities with density xi^1 f+(xi) / total_flux."""
        if self.total_flux <= 0:
            raise InvalidArgument("cannot sample from a distribution with zero flux")
        out = []
        have = 0
        while have < size:
            m = max(64, 5 * (size - have))
            xi, acc = self.propose(rng.random((m, 4)))
            out.append(xi[acc])
            have += int(acc.sum())
        return np.concatenate(out)[:size]


def shellcap(params: ProblemParams, amplitude: float | None = None, **kw) -> OutgoingDistribution:
    """Constant ``amplitude`` (default M) on {xi^1 > 0, c < |xi - c| < R}."""
    amp = params.M if amplitude is None else float(amplitude)
    beam = params.beam
    c = params.c

    def density(xi):
        r = np.linalg.norm(xi - beam, axis=-1)
        return np.where(r > c, amp, 0.0)

    return OutgoingDistribution("shellcap", params, density, amp, {}, **kw)


def gaussbump(params: ProblemParams, center=None, width: float | None = None,
              amplitude: float | None = None, **kw) -> OutgoingDistribution:
    """Truncated Gaussian bump ``A exp(-|xi - m|^2 / 2 w^2)`` inside the support.

    Defaults put the centre at ((R - c)/2, 0, 0), the middle of the emitted
    cap on the x axis, with width (R - c)/4.
    """
    c, R = params.c, params.R
    m = np.array([(R - c) / 2.0, 0.0, 0.0]) if center is None else np.asarray(center, dtype=float)
    w = (R - c) / 4.0 if width is None else float(width)
    if w <= 0:
        raise InvalidArgument("gaussbump width must be > 0")
    amp = params.M if amplitude is None else float(amplitude)

    def density(xi):
        d = xi - m
        return amp * np.exp(-np.sum(d * d, axis=-1) / (2.0 * w * w))

    return OutgoingDistribution("gaussbump", params, density, amp,
                                {"center": m.tolist(), "width": w}, **kw)


OUTGOING = {"shellcap": shellcap, "gaussbump": gaussbump}


def make_outgoing(spec: dict | str, params: ProblemParams) -> OutgoingDistribution:
    """Outgoing profile from a config entry: a name or {"name": ..., options}."""
    if isinstance(spec, str):
        spec = {"name": spec}
    spec = dict(spec)
    name = spec.pop("name", None)
    if name not in OUTGOING:
        raise InvalidArgument(f"unknown outgoing distribution {name!r}; catalog: {sorted(OUTGOING)}")
    return OUTGOING[name](params, **spec)
