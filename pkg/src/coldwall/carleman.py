"""Hard-sphere gain term Q+(f, g) in three forms, and its cold-beam specialization.

* ``gain_direct``: the half-sphere form, an integral over the partner
  velocity xi_* and the collision normal n with weight |(xi - xi_*).n|.
* ``gain_carleman``: g weighted by 1/|xi_1 - xi_0| times the integral of f
  over the plane through xi_0 perpendicular to xi_1 - xi_0.
* ``gain_mollified``: the pair integral against a Gaussian mollifier of
  variance ``epsilon`` centred at xi_0, written in midpoint coordinates; it
  tends to Q+(f, g)(xi_0) as epsilon -> 0.

``K_apply`` is the plane form with g a point mass at the beam velocity.
All quadratures are tensor rules refined until two successive levels agree.
"""

from __future__ import annotations

import math

import numpy as np

from .distributions import TestDistribution
from .errors import DegenerateState, SingularConfiguration
from .geometry import ProblemParams, tangent_basis, velocity
from .quadrature import (
    QuadratureSpec,
    gauss_hermite_normal,
    gauss_legendre,
    level_points,
    periodic_nodes,
    refine,
)


def collision_frequency(xi, params: ProblemParams) -> float:
    """Collisions per unit time against the beam: rate_multiplier * pi * |xi - c|."""
    d = velocity(xi) - params.beam
    return params.rate_multiplier * math.pi * float(np.linalg.norm(d))


def _reach(dist: TestDistribution, quad: QuadratureSpec) -> float:
    return min(dist.reach, quad.truncation_radius)


def sphere_rule(n_theta: int, n_phi: int, pole=None, cos_min: float = -1.0):
    """Directions and weights covering the cap {w.pole >= cos_min} of S^2.

    Gauss-Legendre in cos(theta), trapezoid in the azimuth.
    """
    x, wx = gauss_legendre(n_theta, cos_min, 1.0)
    phi, wphi = periodic_nodes(n_phi)
    s = np.sqrt(np.maximum(1.0 - x * x, 0.0))
    if pole is None:
        pole = np.array([0.0, 0.0, 1.0])
    pole = np.asarray(pole, dtype=float)
    t1, t2 = tangent_basis(pole)
    dirs = (x[:, None, None] * pole
            + s[:, None, None] * (np.cos(phi)[None, :, None] * t1 + np.sin(phi)[None, :, None] * t2))
    w = wx[:, None] * wphi[None, :]
    return dirs.reshape(-1, 3), w.reshape(-1)


def _plane_integrals(f: TestDistribution, base: np.ndarray, normals: np.ndarray,
                     n_l: int, n_phi: int, reach: float) -> np.ndarray:
    """Integral of f over the planes through ``base`` with the given unit normals.

    Polar coordinates centred on the projection of f's centre onto each
    plane, truncated where the plane leaves the ball of radius ``reach``.
    """
    normals = np.atleast_2d(normals)
    h = (f.center - base) @ normals.T  # signed distances, shape (P,)
    q = f.center[None, :] - h[:, None] * normals
    lmax = np.sqrt(np.maximum(reach * reach - h * h, 0.0))
    t1, t2 = tangent_basis(normals)
    u, wu = gauss_legendre(n_l, 0.0, 1.0)
    phi, wphi = periodic_nodes(n_phi)
    e = np.cos(phi)[:, None, None] * t1[None] + np.sin(phi)[:, None, None] * t2[None]  # (nphi, P, 3)
    out = np.zeros(len(normals))
    for i, (ui, wi) in enumerate(zip(u, wu)):
        l = ui * lmax  # (P,)
        pts = q[None] + l[None, :, None] * e
        vals = f.evaluate(pts)  # (nphi, P)
        out += wi * lmax * l * (wphi @ vals)
    return out


def K_apply(f: TestDistribution, xi0, quad: QuadratureSpec, params: ProblemParams) -> float:
    """Gain against the cold beam: (1/|xi0 - c|) times the integral of f over
    the plane through xi0 perpendicular to xi0 - c."""
    xi0 = velocity(xi0)
    d = xi0 - params.beam
    r0 = float(np.linalg.norm(d))
    if r0 == 0.0:
        raise DegenerateState("xi0 equals the beam velocity; K is undefined there")
    if f.is_zero:
        return 0.0
    m = (d / r0)[None, :]
    reach = _reach(f, quad)

    def level(k):
        n_l = level_points(16, k)
        n_phi = level_points(24, k)
        return float(_plane_integrals(f, xi0, m, n_l, n_phi, reach)[0]) / r0, n_l * n_phi

    value, _ = refine(level, quad, levels=9, what="K plane integral")
    return value


def gain_carleman(f: TestDistribution, g: TestDistribution, xi0, quad: QuadratureSpec) -> float:
    """Plane form: integral over xi_1 of g(xi_1)/|xi_1 - xi_0| times the
    integral of f over the plane through xi_0 perpendicular to xi_1 - xi_0.

    With xi_1 = xi_0 + rho w the weight becomes rho drho dw and the plane
    depends on w alone, so the integral factorizes into a radial integral of
    g and a plane integral of f per direction.
    """
    xi0 = velocity(xi0)
    if f.is_zero or g.is_zero:
        return 0.0
    reach_g = _reach(g, quad)
    reach_f = _reach(f, quad)
    to_g = g.center - xi0
    dist = float(np.linalg.norm(to_g))
    if dist <= reach_g and g.scale <= 1e-9 * (1.0 + float(np.linalg.norm(xi0))):
        raise SingularConfiguration("g is concentrated at xi0; the 1/|xi_1 - xi_0| weight diverges")
    if dist > reach_g:
        pole = to_g / dist
        cos_min = math.sqrt(1.0 - (reach_g / dist) ** 2)
        rho_lo, rho_hi = dist - reach_g, dist + reach_g
    else:
        pole, cos_min = None, -1.0
        rho_lo, rho_hi = 0.0, dist + reach_g

    def level(k):
        dirs, wd = sphere_rule(level_points(20, k), level_points(24, k), pole, cos_min)
        rho, wr = gauss_legendre(level_points(24, k), rho_lo, rho_hi)
        G = np.zeros(len(dirs))
        for ri, wi in zip(rho, wr):
            G += wi * ri * g.evaluate(xi0 + ri * dirs)
        keep = G != 0.0
        P = np.zeros(len(dirs))
        if np.any(keep):
            P[keep] = _plane_integrals(f, xi0, dirs[keep], level_points(16, k), level_points(20, k), reach_f)
        n_eval = len(dirs) * (len(rho) + level_points(16, k) * level_points(20, k))
        return float(np.sum(wd * G * P)), n_eval

    value, _ = refine(level, quad, levels=7, what="Carleman gain")
    return value


def _pair_extent(f: TestDistribution, g: TestDistribution, quad: QuadratureSpec) -> float:
    """Upper bound on |xi - xi_*| over pairs carrying mass."""
    return float(np.linalg.norm(f.center - g.center)) + _reach(f, quad) + _reach(g, quad)


def gain_direct(f: TestDistribution, g: TestDistribution, xi, quad: QuadratureSpec) -> float:
    """Half-sphere form of Q+(f, g)(xi).

    xi_* = xi + s w in spherical coordinates about xi; the normal is
    n = mu u + sqrt(1 - mu^2)(cos psi e1 + sin psi e2) with u = (xi - xi_*)/s,
    so |(xi - xi_*).n| = s mu and the pre-collision pair is
    (xi - s mu n, xi_* + s mu n).
    """
    xi = velocity(xi)
    if f.is_zero or g.is_zero:
        return 0.0
    smax = _pair_extent(f, g, quad)

    def level(k):
        s, ws = gauss_legendre(level_points(16, k), 0.0, smax)
        dirs, wd = sphere_rule(level_points(12, k), level_points(16, k))
        mu, wmu = gauss_legendre(level_points(10, k), 0.0, 1.0)
        psi, wpsi = periodic_nodes(level_points(12, k))
        u = -dirs
        e1, e2 = tangent_basis(u)
        sq = np.sqrt(1.0 - mu * mu)
        # normals: (n_dir, n_mu, n_psi, 3)
        n = (mu[None, :, None, None] * u[:, None, None, :]
             + sq[None, :, None, None] * (np.cos(psi)[None, None, :, None] * e1[:, None, None, :]
                                         + np.sin(psi)[None, None, :, None] * e2[:, None, None, :]))
        wn = wd[:, None, None] * (wmu * mu)[None, :, None] * wpsi[None, None, :]
        mun = mu[None, :, None, None] * n
        total = 0.0
        for si, wsi in zip(s, ws):
            xs = xi + si * dirs
            pre = f.evaluate(xi - si * mun)
            post = g.evaluate(xs[:, None, None, :] + si * mun)
            total += wsi * si ** 3 * float(np.sum(wn * pre * post))
        return total, len(s) * n.size // 3 * 2

    value, _ = refine(level, quad, levels=6, what="direct gain")
    return value


# Prefactor of the mollifier kernel c / (sqrt(2 pi eps) |z - xi0|) [...].
# Integrating the Gaussian over the sphere of diameter |xi - xi_*| and
# dividing by that diameter gives c = 1/2; the value 2 is what one gets by
# dropping the 1/|xi - xi_*| weight and a factor 1/2 from the sphere radius.
MOLLIFIER_PREFACTOR = 0.5


def mollifier_terms(f: TestDistribution, g: TestDistribution, xi0, epsilon: float,
                    quad: QuadratureSpec, prefactor: float = MOLLIFIER_PREFACTOR) -> tuple[float, float]:
    """The two bracket terms of the mollified pair integral, separately.

    Coordinates: z = xi0 + rho w_z (pair midpoint) and xi - xi_* = s w_w.
    The angular average of the integrand over w_z is even in rho, so the
    difference of the two terms equals a single Gaussian integral over the
    whole line in rho, which Gauss-Hermite handles without truncation.  The
    second term lives within a few sqrt(epsilon) of rho = s = 0 and gets its
    own grid; the first term is the sum of the two.
    """
    xi0 = velocity(xi0)
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if f.is_zero or g.is_zero:
        return 0.0, 0.0
    se = math.sqrt(epsilon)
    smax = _pair_extent(f, g, quad)

    def pair_sum(s, ws, rho_fn, nt, nphi):
        """Sum over s, both spheres and the rho nodes produced by rho_fn(s)."""
        dirs, wd = sphere_rule(nt, nphi)
        total = 0.0
        for si, wsi in zip(s, ws):
            rho, wrho = rho_fn(si)
            half_w = 0.5 * si * dirs  # (D, 3)
            for rj, wj in zip(rho, wrho):
                z = xi0 + rj * dirs  # (D, 3)
                a = f.evaluate(z[:, None, :] + half_w[None, :, :])
                b = g.evaluate(z[:, None, :] - half_w[None, :, :])
                total += wsi * wj * float(wd @ (a * b) @ wd)
        return total

    def difference_level(k):
        s, ws = gauss_legendre(level_points(16, k), 0.0, smax)
        tau, wtau = gauss_hermite_normal(level_points(8, k))
        ws = ws * s * s

        def rho_fn(si):
            # rho^2 drho * c / (sqrt(2 pi eps) rho) * exp(-(rho - s/2)^2 / 2 eps) = c rho dN(tau)
            rho = 0.5 * si + se * tau
            return rho, prefactor * rho * wtau

        nt, nphi = level_points(10, k), level_points(14, k)
        return pair_sum(s, ws, rho_fn, nt, nphi), len(s) * len(tau) * (nt * nphi) ** 2

    def second_level(k):
        top = 8.0 * se
        s, ws = gauss_legendre(level_points(12, k), 0.0, 2.0 * top)
        ws = ws * s * s
        norm = prefactor / math.sqrt(2.0 * math.pi * epsilon)
        n_rho = level_points(12, k)

        def rho_fn(si):
            hi = top - 0.5 * si
            if hi <= 0:
                return (), ()
            rho, wrho = gauss_legendre(n_rho, 0.0, hi)
            return rho, wrho * norm * rho * np.exp(-(rho + 0.5 * si) ** 2 / (2.0 * epsilon))

        nt, nphi = level_points(6, k), level_points(8, k)
        return pair_sum(s, ws, rho_fn, nt, nphi), len(s) * n_rho * (nt * nphi) ** 2

    diff, _ = refine(difference_level, quad, levels=6, what="mollified gain")
    second_quad = QuadratureSpec(relative_tolerance=max(quad.relative_tolerance, 1e-4),
                                 absolute_tolerance=1e-300, max_evaluations=quad.max_evaluations)
    second, _ = refine(second_level, second_quad, levels=5, what="mollifier second term")
    return diff + second, second


def gain_mollified(f: TestDistribution, g: TestDistribution, xi0, epsilon: float,
                   quad: QuadratureSpec, prefactor: float = MOLLIFIER_PREFACTOR) -> float:
    """Integral of Q+(f, g) against a Gaussian of variance epsilon centred at xi0."""
    first, second = mollifier_terms(f, g, xi0, epsilon, quad, prefactor)
    return first - second


def maxwellian_loss_integral(theta: float, xi, quad: QuadratureSpec | None = None) -> float:
    """Integral of M(xi_*) |xi - xi_*| over xi_* for the unit-mass Maxwellian.

    Radial quadrature in rho = |xi_* - xi| with the angular integral of the
    Gaussian done analytically.
    """
    quad = quad or QuadratureSpec(relative_tolerance=1e-12)
    a = float(np.linalg.norm(velocity(xi)))
    sig2 = float(theta)
    norm = (2.0 * math.pi * sig2) ** -1.5
    top = a + 12.0 * math.sqrt(sig2)

    def angular(rho):
        x = a * rho / sig2
        # 2 pi int_{-1}^{1} exp(-x t) dt, scaled by exp(-x) to avoid overflow
        small = x < 1e-8
        xs = np.where(small, 1.0, x)
        shell = np.where(small, 4.0 * math.pi * np.exp(-x), 2.0 * math.pi * -np.expm1(-2.0 * xs) / xs)
        return shell * np.exp(-(a - rho) ** 2 / (2.0 * sig2))

    def level(k):
        rho, w = gauss_legendre(level_points(40, k), 0.0, top)
        return float(np.sum(w * rho ** 3 * angular(rho))) * norm, len(rho)

    value, _ = refine(level, quad, levels=8, what="Maxwellian loss integral")
    return value
