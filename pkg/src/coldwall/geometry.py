"""Velocity-space geometry of hard-sphere collisions against a monokinetic beam.

The background gas moves with the single velocity ``c = (-c, 0, 0)``.  A
collision with unit normal ``n`` maps ``xi`` to ``xi - ((xi - c).n) n``; the
distance to the beam velocity never grows (the shrinking property).  The
velocities that can produce ``xi0`` in one collision fill the plane through
``xi0`` perpendicular to ``xi0 - c`` (the plane of influence), and walking
backwards along such planes with angles ``alpha_i`` gives the chain
``xi_0, xi_1, ..., xi_n`` with radii ``r_i = r_{i-1} / cos(alpha_i)``.

Velocities are plain float arrays of shape ``(3,)``; most functions also
accept a leading batch dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateState, InvalidArgument

UNIT_TOL = 1e-12
REL_TOL = 1e-10
# angles closer than this to pi/2 overflow tan() for practical purposes
HALF_PI_MARGIN = 1e-12


@dataclass(frozen=True)
class ProblemParams:
    """Physical parameters of the boundary problem.

    ``rate_multiplier`` stands for rho*sigma^2 and only rescales lengths in x.
    """

    c: float
    R: float
    M: float = 1.0
    rate_multiplier: float = 1.0
    unit_tol: float = UNIT_TOL
    rel_tol: float = REL_TOL

    def __post_init__(self):
        vals = (self.c, self.R, self.M, self.rate_multiplier)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidArgument(f"non-finite problem parameters: {self!r}")
        if self.c <= 0:
            raise InvalidArgument(f"background speed c must be > 0, got {self.c}")
        if self.R <= self.c:
            raise InvalidArgument(f"support radius R must exceed c, got R={self.R}, c={self.c}")
        if self.M <= 0:
            raise InvalidArgument(f"density bound M must be > 0, got {self.M}")
        if self.rate_multiplier <= 0:
            raise InvalidArgument(f"rate_multiplier must be > 0, got {self.rate_multiplier}")

    @property
    def beam(self) -> np.ndarray:
        """The background velocity (-c, 0, 0)."""
        return np.array([-self.c, 0.0, 0.0])


def velocity(v) -> np.ndarray:
    """Validate and copy a velocity (or batch of velocities)."""
    v = np.array(v, dtype=float)
    if v.shape[-1:] != (3,):
        raise InvalidArgument(f"velocity must have trailing dimension 3, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidArgument("velocity components must be finite")
    return v


def _relative(xi, params: ProblemParams):
    d = velocity(xi) - params.beam
    r = np.linalg.norm(d, axis=-1)
    return d, r


def tangent_basis(u: np.ndarray):
    """Deterministic orthonormal tangents for unit vector(s) ``u``.

    tangent1 = normalize(a x u) with a = e3, or a = e2 when |u.e3| > 0.9;
    tangent2 = u x tangent1.
    """
    u = np.asarray(u, dtype=float)
    a = np.zeros_like(u)
    near_e3 = np.abs(u[..., 2]) > 0.9
    a[..., 2] = np.where(near_e3, 0.0, 1.0)
    a[..., 1] = np.where(near_e3, 1.0, 0.0)
    t1 = np.cross(a, u)
    t1 = t1 / np.linalg.norm(t1, axis=-1, keepdims=True)
    t2 = np.cross(u, t1)
    return t1, t2


def axial_basis(u: np.ndarray):
    """Tangents built from the x axis: tangent1 = normalize(e1 x u).

    Smooth everywhere except at u = +-e1, which makes it the better frame
    for quasi-Monte Carlo integration over the azimuths.  Falls back to
    :func:`tangent_basis` at the poles.
    """
    u = np.asarray(u, dtype=float)
    t1 = np.stack([np.zeros_like(u[..., 0]), -u[..., 2], u[..., 1]], axis=-1)
    norm = np.linalg.norm(t1, axis=-1, keepdims=True)
    pole = norm[..., 0] < 1e-12
    t1 = t1 / np.where(norm > 0, norm, 1.0)
    t2 = np.cross(u, t1)
    if np.any(pole):
        s1, s2 = tangent_basis(u)
        t1 = np.where(pole[..., None], s1, t1)
        t2 = np.where(pole[..., None], s2, t2)
    return t1, t2


_FRAMES = {"standard": tangent_basis, "axial": axial_basis}


def collide(xi, normal, params: ProblemParams) -> np.ndarray:
    """Post-collision velocity ``xi - ((xi - c).n) n`` against the beam."""
    n = velocity(normal)
    if np.any(np.abs(np.linalg.norm(n, axis=-1) - 1.0) > params.unit_tol):
        raise InvalidArgument("collision normal must be a unit vector")
    d = velocity(xi) - params.beam
    dn = np.sum(d * n, axis=-1, keepdims=True)
    return velocity(xi) - dn * n


def sample_scatter_normal(xi, params: ProblemParams, rng: np.random.Generator, size=None):
    """Draw collision normals on the half-sphere u.n > 0 with density ~ u.n.

    ``mu = u.n`` is drawn as sqrt(uniform) (density 2 mu), the azimuth
    uniformly.  With ``size`` a batch of normals for the same ``xi`` is
    returned.
    """
    d, r = _relative(xi, params)
    if np.any(r == 0):
        raise DegenerateState("xi equals the beam velocity; collision direction undefined")
    u = d / np.expand_dims(r, -1)
    shape = (size,) if size is not None else u.shape[:-1]
    mu = np.sqrt(1.0 - rng.random(shape))
    psi = 2.0 * np.pi * rng.random(shape)
    t1, t2 = tangent_basis(u)
    s = np.sqrt(1.0 - mu * mu)[..., None]
    return mu[..., None] * u + s * (np.cos(psi)[..., None] * t1 + np.sin(psi)[..., None] * t2)


@dataclass(frozen=True)
class PlaneChart:
    base: np.ndarray
    unit_normal: np.ndarray
    tangent1: np.ndarray
    tangent2: np.ndarray


def make_plane_chart(xi, params: ProblemParams, frame: str = "standard") -> PlaneChart:
    """Polar chart of the plane through ``xi`` perpendicular to ``xi - c``."""
    d, r = _relative(xi, params)
    if np.any(r == 0):
        raise DegenerateState("xi equals the beam velocity; plane of influence undefined")
    u = d / np.expand_dims(r, -1)
    t1, t2 = _FRAMES[frame](u)
    return PlaneChart(velocity(xi), u, t1, t2)


def plane_point(chart: PlaneChart, l, phi) -> np.ndarray:
    """The point ``base + l (cos(phi) t1 + sin(phi) t2)``."""
    l = np.asarray(l, dtype=float)
    if np.any(l < 0):
        raise InvalidArgument("polar radius l must be >= 0")
    phi = np.asarray(phi, dtype=float)
    e = np.cos(phi)[..., None] * chart.tangent1 + np.sin(phi)[..., None] * chart.tangent2
    return chart.base + l[..., None] * e


@dataclass(frozen=True)
class PathChart:
    """Backward chain xi_0 -> xi_n; ``velocities[0]`` is xi_0."""

    xi0: np.ndarray
    alphas: np.ndarray
    phis: np.ndarray
    radii: np.ndarray
    velocities: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.alphas)


def _check_alphas(alphas):
    alphas = np.asarray(alphas, dtype=float)
    if np.any(alphas < 0) or np.any(alphas >= np.pi / 2 - HALF_PI_MARGIN):
        raise InvalidArgument("chain angles must lie in [0, pi/2)")
    return alphas


def chain_construct(xi0, alphas, phis, params: ProblemParams, frame: str = "standard") -> PathChart:
    """Build xi_1..xi_n backwards from the return velocity ``xi0``.

    xi_i lies on the plane of influence of xi_{i-1} at polar radius
    l_i = r_{i-1} tan(alpha_i) and polar angle phi_i.
    """
    xi0 = velocity(xi0)
    if xi0[0] >= 0:
        raise InvalidArgument("return velocity must have xi0^1 < 0")
    alphas = _check_alphas(alphas)
    phis = np.asarray(phis, dtype=float)
    if alphas.shape != phis.shape or alphas.ndim != 1:
        raise InvalidArgument("alphas and phis must be 1-D sequences of equal length")
    vel, radii = chain_velocities(xi0[None, :], np.cos(alphas)[None, :], phis[None, :], params.c, frame)
    return PathChart(xi0, alphas, phis, radii[0], vel[0])


def chain_velocities(xi0, cos_alphas, phis, c: float, frame: str = "standard"):
    """Batched chain construction.

    Parameters are arrays of shape (S, 3), (S, n), (S, n).  Angles are given
    through their cosines, which is how every sampler in this package draws
    them.  Returns velocities (S, n+1, 3) and radii (S, n+1) computed from the
    product-of-cosines formula.
    """
    basis = _FRAMES[frame]
    beam = np.array([-c, 0.0, 0.0])
    S, n = cos_alphas.shape
    vel = np.empty((S, n + 1, 3))
    radii = np.empty((S, n + 1))
    vel[:, 0] = xi0
    cur = np.asarray(xi0, dtype=float)
    r = np.linalg.norm(cur - beam, axis=-1)
    radii[:, 0] = r
    for i in range(n):
        x = cos_alphas[:, i]
        u = (cur - beam) / r[:, None]
        t1, t2 = basis(u)
        l = r * np.sqrt(1.0 - x * x) / x
        ph = phis[:, i]
        cur = cur + l[:, None] * (np.cos(ph)[:, None] * t1 + np.sin(ph)[:, None] * t2)
        r = r / x
        vel[:, i + 1] = cur
        radii[:, i + 1] = r
    return vel, radii
