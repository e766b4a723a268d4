"""Collision-count series for the returning distribution at the wall.

The n-collision term at a return velocity xi0 is

    f_n(xi0) = 1/(2 pi^(n+2)) int_U int_W  prod sin(a_i) / prod cos(a_i)^3
               J(a; b) |xi_n^1| / r_n  f+(xi_n)  da dphi

over the chain xi0 -> xi_1 -> ... -> xi_n built backwards on planes of
influence.  J is the k-integral of the chain's rates (index 0 is xi0).  With
``boundary="whole_line"`` J is the plain integral, which counts every
backward crossing of x = 0 by a particle moving on the whole line.  With
``boundary="absorbing"`` (default) J is corrected so that only first
crossings count, which is what a wall that absorbs returning particles sees.

Bound evaluators multiply the stated constants by ``JNormalization.ratio``
because those constants were derived with J^{1,1}(1,1) = 1/(4 pi), while the
quadrature oracle gives pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.stats import qmc

from .backend import get_backend
from .distributions import OutgoingDistribution
from .errors import InvalidArgument
from .geometry import ProblemParams, chain_velocities, tangent_basis, velocity
from .jintegrals import JNormalization, j_pair
from .quadrature import QuadratureSpec, gauss_legendre, level_points, refine
from .regions import DEFAULT_BETA, MC_CHUNK, RegionParams, choose_D
from .rng import chunk_generator, chunk_sizes

__all__ = [
    "SeriesTermEstimate", "RemainderBound", "choose_D", "default_normalization",
    "region_params", "f_minus_n_mc", "split_I1_I2", "term_with_split", "f_minus_1_quad", "f_minus_series",
    "flux_integral", "remainder_flux_bound", "remainder_flux_formula", "remainder_threshold",
    "remainder_threshold_unsimplified", "i1_sum_bound", "i2_sum_bound", "pointwise_bound_outer",
    "singularity_constant", "singularity_envelope", "convolution_check", "normalization_report",
]

BOUNDARIES = ("absorbing", "whole_line")
SAMPLERS = ("rejection", "simplex")


@dataclass(frozen=True)
class SeriesTermEstimate:
    n: int
    value: float
    stderr: float
    samples: int
    method: str  # "mc" or "quadrature"
    sampler: str = ""
    discarded: int = 0

    def __post_init__(self):
        if self.value < 0 or self.stderr < 0:
            raise InvalidArgument("series term estimates are nonnegative")


_NORM: JNormalization | None = None


def default_normalization() -> JNormalization:
    """kappa measured once per process by the quadrature oracle."""
    global _NORM
    if _NORM is None:
        _NORM = JNormalization.measure()
    return _NORM


def region_params(xi0, params: ProblemParams, n: int, beta: float = DEFAULT_BETA,
                  D: float | None = None) -> RegionParams:
    r0 = float(np.linalg.norm(velocity(xi0) - params.beam))
    return RegionParams(r0, params.c, params.R, n, beta, D)


def _check_boundary(boundary: str):
    if boundary not in BOUNDARIES:
        raise InvalidArgument(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")


def _return_velocity(xi0, params: ProblemParams) -> tuple[np.ndarray, float]:
    xi0 = velocity(xi0)
    if xi0[0] >= 0:
        raise InvalidArgument("return velocity must have xi0^1 < 0")
    r0 = float(np.linalg.norm(xi0 - params.beam))
    if r0 <= 0:
        raise InvalidArgument("xi0 must differ from the beam velocity")
    return xi0, r0


def _chain_integrand(xi0, x, phi, fplus: OutgoingDistribution, kappa: float, boundary: str, backend):
    """prod x^-3 J |xi_n^1| / r_n f+(xi_n) per sample, plus the discard mask.

    Samples with some xi_i^1 == 0 (rates undefined) get weight 0 and are
    flagged as discarded.
    """
    params = fplus.params
    S, n = x.shape
    vel, radii = chain_velocities(np.broadcast_to(xi0, (S, 3)), x, phi, params.c)
    v1 = vel[:, :, 0]
    rn = radii[:, n]
    inside = (rn >= params.c) & (rn <= params.R) & (v1[:, n] > 0)
    fp = fplus.evaluate(vel[:, n])
    grazing = np.any(v1 == 0.0, axis=1)
    live = inside & (fp > 0) & ~grazing
    g = np.zeros(S)
    if np.any(live):
        rates = np.pi * radii[live] / np.abs(v1[live])
        fwd = (v1[live] > 0).astype(np.uint8)
        J = np.maximum(np.asarray(backend.j_effective(rates, fwd, kappa, boundary == "absorbing")), 0.0)
        xl = x[live]
        g[live] = J * np.abs(v1[live, n]) / rn[live] * fp[live] / np.prod(xl, axis=1) ** 3
    return g, grazing & inside


def _k_radius(x, rp: RegionParams):
    return rp.r0 / np.prod(x[:, : rp.k], axis=1)


def _term_mc(xi0, n, fplus, samples, seed, beta, D, sampler, boundary, norm, backend, chunk):
    """W1 and W2 weight sums and second moments accumulated chunk by chunk."""
    params = fplus.params
    xi0, r0 = _return_velocity(xi0, params)
    _check_boundary(boundary)
    if sampler not in SAMPLERS:
        raise InvalidArgument(f"sampler must be one of {SAMPLERS}, got {sampler!r}")
    if n < 1 or samples < 1:
        raise InvalidArgument("need n >= 1 and samples >= 1")
    rp = RegionParams(r0, params.c, params.R, n, beta, D)
    acc = np.zeros(4)  # sum W1, sum W2, square W1, square W2
    discarded = 0
    if r0 > params.R or fplus.amplitude == 0:
        return acc, discarded
    norm = norm or default_normalization()
    backend = backend or get_backend()
    lo = max(0.0, math.log(params.c / r0))
    hi = math.log(params.R / r0)
    vol = (hi ** n - lo ** n) / math.factorial(n)
    pref = 2.0 ** (n - 1) / math.pi ** 2
    for idx, size in enumerate(chunk_sizes(samples, chunk)):
        gen = chunk_generator(seed, (n << 32) + idx)
        if sampler == "rejection":
            x = 1.0 - gen.random((size, n))
            w = np.full(size, pref)
        else:
            # y uniform on the shell {lo <= sum y <= hi}: radius ~ s^(n-1), direction Dirichlet(1)
            s = (lo ** n + gen.random(size) * (hi ** n - lo ** n)) ** (1.0 / n)
            e = -np.log(1.0 - gen.random((size, n)))
            y = s[:, None] * e / e.sum(axis=1, keepdims=True)
            x = np.exp(-y)
            w = pref * vol * np.prod(x, axis=1)
        phi = 2.0 * np.pi * gen.random((size, n))
        g, disc = _chain_integrand(xi0, x, phi, fplus, norm.kappa, boundary, backend)
        w = w * g
        in1 = _k_radius(x, rp) < params.c / rp.D
        w1 = np.where(in1, w, 0.0)
        w2 = np.where(in1, 0.0, w)
        acc += (w1.sum(), w2.sum(), (w1 * w1).sum(), (w2 * w2).sum())
        discarded += int(np.count_nonzero(disc))
    return acc, discarded


def _estimate(n, total, square, samples, sampler, discarded):
    mean = total / samples
    var = max(square / samples - mean * mean, 0.0)
    return SeriesTermEstimate(n, max(mean, 0.0), math.sqrt(var / max(samples - 1, 1)), int(samples),
                              "mc", sampler, discarded)


def _term_estimates(xi0, n, fplus, samples, seed, beta, D, sampler, boundary, norm, backend, chunk):
    acc, disc = _term_mc(xi0, n, fplus, samples, seed, beta, D, sampler, boundary, norm, backend, chunk)
    I1 = _estimate(n, acc[0], acc[2], samples, sampler, disc)
    I2 = _estimate(n, acc[1], acc[3], samples, sampler, disc)
    # the total is reported as I1 + I2 so the split adds up exactly
    mean = I1.value + I2.value
    var = max((acc[2] + acc[3]) / samples - mean * mean, 0.0)
    total = SeriesTermEstimate(n, mean, math.sqrt(var / max(samples - 1, 1)), samples, "mc", sampler, disc)
    return I1, I2, total


def split_I1_I2(xi0, n: int, fplus: OutgoingDistribution, samples: int, seed: int = 0,
                beta: float = DEFAULT_BETA, D: float | None = None, sampler: str = "rejection",
                boundary: str = "absorbing", norm: JNormalization | None = None, backend=None,
                chunk: int = MC_CHUNK):
    """Monte Carlo estimates of the W1 and W2 parts of the n-collision term."""
    I1, I2, _ = _term_estimates(xi0, n, fplus, samples, seed, beta, D, sampler, boundary, norm,
                                backend, chunk)
    return I1, I2


def term_with_split(xi0, n: int, fplus: OutgoingDistribution, samples: int, seed: int = 0,
                    beta: float = DEFAULT_BETA, D: float | None = None, sampler: str = "rejection",
                    boundary: str = "absorbing", norm: JNormalization | None = None, backend=None,
                    chunk: int = MC_CHUNK):
    """(I1, I2, total) from one sample stream; total.value == I1.value + I2.value."""
    return _term_estimates(xi0, n, fplus, samples, seed, beta, D, sampler, boundary, norm,
                           backend, chunk)


def f_minus_n_mc(xi0, n: int, fplus: OutgoingDistribution, samples: int, seed: int = 0,
                 beta: float = DEFAULT_BETA, D: float | None = None, sampler: str = "rejection",
                 boundary: str = "absorbing", norm: JNormalization | None = None, backend=None,
                 chunk: int = MC_CHUNK) -> SeriesTermEstimate:
    """Unbiased Monte Carlo estimate of the n-collision term at ``xi0``.

    ``sampler="rejection"`` draws cos(alpha_i) uniform and zeroes samples
    outside W; ``"simplex"`` draws y_i = -log cos(alpha_i) uniformly on the
    region where c <= r_n <= R, which stays efficient for small r0.  The value
    equals the sum of the two parts returned by :func:`split_I1_I2`.
    """
    return _term_estimates(xi0, n, fplus, samples, seed, beta, D, sampler, boundary, norm,
                           backend, chunk)[2]


def f_minus_1_quad(xi0, fplus: OutgoingDistribution, quad: QuadratureSpec | None = None,
                   norm: JNormalization | None = None) -> float:
    """Deterministic value of the one-collision term.

    With r1 = r0 / cos(alpha) the term becomes
    (1 / (2 pi^3 r0^2)) int dr1 int dphi J(a1, b0) xi_1^1 f+(xi_1), taken
    over r1 in (max(c, r0), R) and the arc of the influence plane with
    xi_1^1 > 0.  Both are integrated by Gauss-Legendre with refinement; the
    substitution r1 = lo + (R - lo) s^2 absorbs the square-root opening of
    the arc.
    """
    params = fplus.params
    quad = quad or QuadratureSpec(relative_tolerance=1e-8, absolute_tolerance=1e-14)
    xi0, r0 = _return_velocity(xi0, params)
    if r0 > params.R or fplus.amplitude == 0:
        return 0.0
    kappa = (norm or default_normalization()).kappa
    u = (xi0 - params.beam) / r0
    t1, t2 = tangent_basis(u)
    A = math.hypot(t1[0], t2[0])  # length of the x-axis projection onto the plane
    if A < 1e-14:
        return 0.0  # the plane is parallel to the wall: xi_1^1 = xi0^1 < 0
    psi = math.atan2(t2[0], t1[0])
    r_open = math.hypot(r0, xi0[0] / A)  # the arc xi_1^1 > 0 appears beyond this radius
    lo = max(params.c, r0, r_open)
    hi = params.R
    if lo >= hi:
        return 0.0
    b0 = math.pi * r0 / abs(xi0[0])

    def level(k):
        ns = level_points(32, k)
        nt = level_points(32, k)
        s, ws = gauss_legendre(ns, 0.0, 1.0)
        r1 = lo + (hi - lo) * s * s
        wr = ws * 2.0 * (hi - lo) * s
        l = np.sqrt(r1 * r1 - r0 * r0)
        q = np.clip(-xi0[0] / (l * A), -1.0, 1.0)
        h = np.arccos(q)
        t, wt = gauss_legendre(nt, -1.0, 1.0)
        phi = psi + h[:, None] * t[None, :]
        wphi = h[:, None] * wt[None, :]
        cp, sp = np.cos(phi), np.sin(phi)
        xi1 = xi0 + l[:, None, None] * (cp[..., None] * t1 + sp[..., None] * t2)
        v = xi1[..., 0]
        fp = fplus.evaluate(xi1)
        pos = v > 0
        a1 = np.where(pos, math.pi * r1[:, None] / np.where(pos, v, 1.0), np.inf)
        # J xi_1^1 = 2 kappa pi r1 b0 / (a1 + b0), zero at the arc ends
        val = np.where(pos, 2.0 * kappa * math.pi * r1[:, None] * b0 / (a1 + b0), 0.0) * fp
        return float(np.sum(wr[:, None] * wphi * val)), ns * nt

    value, _ = refine(level, quad, levels=10, what="one-collision term")
    return value / (2.0 * math.pi ** 3 * r0 * r0)


def f_minus_series(xi0, n_max: int, fplus: OutgoingDistribution, samples: int, seed: int = 0,
                   beta: float = DEFAULT_BETA, sampler: str = "rejection", boundary: str = "absorbing",
                   norm: JNormalization | None = None, backend=None):
    """Partial sum of the first ``n_max`` terms at ``xi0``.

    Returns (partial_sum, per_term, remainder_bound), where remainder_bound is
    the flux-level bound on the tail beyond n_max (a bound on the mass flux of
    the remainder, not on its pointwise value).
    """
    if n_max < 1:
        raise InvalidArgument("n_max must be >= 1")
    norm = norm or default_normalization()
    terms = [f_minus_n_mc(xi0, n, fplus, samples, seed, beta, None, sampler, boundary, norm, backend)
             for n in range(1, n_max + 1)]
    partial = float(sum(t.value for t in terms))
    return partial, terms, remainder_flux_bound(n_max + 1, fplus.params, norm).value


def _axial_basis_rows(u):
    t1 = np.stack([np.zeros(len(u)), -u[:, 2], u[:, 1]], axis=1)  # e1 x u
    nrm = np.linalg.norm(t1, axis=1)
    t1 = t1 / np.where(nrm > 0, nrm, 1.0)[:, None]
    return t1, np.cross(u, t1)


def _flux_weights(n: int, U: np.ndarray, fplus: OutgoingDistribution, kappa: float, boundary: str,
                  backend) -> np.ndarray:
    """Integrand of the flux of the n-collision term for points U in [0,1)^(2n+3).

    The emitted radius r_n is drawn with density ~ r^2 on (c, R) and the
    cosines as sqrt(1 - u), which turns the r0^2 dr0 volume and the
    prod x^-3 factor into constants.  The return direction is drawn on the
    part of the sphere with xi0^1 < 0 and the last plane angle on the arc
    with xi_n^1 > 0, each with its measure as weight.
    """
    params = fplus.params
    c, R = params.c, params.R
    beam = params.beam
    S = len(U)
    col = iter(range(U.shape[1]))
    rn = np.cbrt(c ** 3 + U[:, next(col)] * (R ** 3 - c ** 3))
    x = np.sqrt(1.0 - U[:, [next(col) for _ in range(n)]])
    x = np.where(x > 0, x, np.finfo(float).tiny)
    r0 = rn * np.prod(x, axis=1)
    hi = np.minimum(1.0, c / r0)
    w = 0.5 * (hi + 1.0)
    o1 = -1.0 + (hi + 1.0) * U[:, next(col)]
    az = 2.0 * np.pi * U[:, next(col)]
    so = np.sqrt(np.maximum(1.0 - o1 * o1, 0.0))
    cur = beam + r0[:, None] * np.stack([o1, so * np.cos(az), so * np.sin(az)], axis=1)
    vel = np.empty((S, n + 1, 3))
    vel[:, 0] = cur
    r = r0.copy()
    for i in range(n):
        u = (cur - beam) / r[:, None]
        t1, t2 = _axial_basis_rows(u)
        l = r * np.sqrt(1.0 - x[:, i] ** 2) / x[:, i]
        ui = U[:, next(col)]
        if i == n - 1:
            A = np.hypot(t1[:, 0], t2[:, 0])
            ps = np.arctan2(t2[:, 0], t1[:, 0])
            q = np.clip(-cur[:, 0] / (l * A + 1e-300), -1.0, 1.0)
            h = np.arccos(q)
            ph = ps + h * (2.0 * ui - 1.0)
            w = w * h / np.pi
        else:
            ph = 2.0 * np.pi * ui
        cur = cur + l[:, None] * (np.cos(ph)[:, None] * t1 + np.sin(ph)[:, None] * t2)
        r = r / x[:, i]
        vel[:, i + 1] = cur
    v1 = vel[:, :, 0]
    ok = (v1[:, 0] < 0) & (v1[:, n] > 0) & np.all(v1 != 0.0, axis=1)
    fp = fplus.evaluate(vel[:, n])
    ok &= fp > 0
    out = np.zeros(S)
    if np.any(ok):
        radii = np.linalg.norm(vel[ok] - beam, axis=2)
        rates = np.pi * radii / np.abs(v1[ok])
        fwd = (v1[ok] > 0).astype(np.uint8)
        J = np.maximum(np.asarray(backend.j_effective(rates, fwd, kappa, boundary == "absorbing")), 0.0)
        H = J / (2.0 * kappa * rates[:, 0])
        out[ok] = w[ok] * H * v1[ok, n] * fp[ok]
    return out


def flux_integral(n: int, fplus: OutgoingDistribution, samples: int = 1 << 16, replicates: int = 8,
                  seed: int = 0, boundary: str = "absorbing", norm: JNormalization | None = None,
                  backend=None) -> SeriesTermEstimate:
    """Mass flux of the n-collision term, int |xi0^1| f_n(xi0) dxi0.

    Randomized quasi Monte Carlo: ``replicates`` independently scrambled Sobol
    sets of ``samples`` points (rounded up to a power of two); the stderr is
    the spread of the replicate means.
    """
    _check_boundary(boundary)
    if n < 1 or replicates < 2:
        raise InvalidArgument("need n >= 1 and at least two replicates")
    if fplus.amplitude == 0:
        return SeriesTermEstimate(n, 0.0, 0.0, 0, "mc", "rqmc")
    norm = norm or default_normalization()
    backend = backend or get_backend()
    m = max(1, int(math.ceil(math.log2(samples))))
    c, R = fplus.params.c, fplus.params.R
    pref = 4.0 * norm.kappa * (R ** 3 - c ** 3) / 3.0
    means = []
    for rep in range(replicates):
        gen = np.random.default_rng([seed, n, rep])
        U = qmc.Sobol(2 * n + 3, scramble=True, seed=gen).random_base2(m)
        means.append(pref * float(np.mean(_flux_weights(n, U, fplus, norm.kappa, boundary, backend))))
    means = np.array(means)
    return SeriesTermEstimate(n, max(float(means.mean()), 0.0),
                              float(means.std(ddof=1) / math.sqrt(replicates)),
                              replicates << m, "mc", "rqmc")


@dataclass(frozen=True)
class RemainderBound:
    n: int
    value: float  # normalization-adjusted M R^5/c n e^(1-n)
    raw: float  # the formula as stated, without the normalization factor
    valid: bool  # n above the stated threshold
    threshold: float
    threshold_unsimplified: float
    first_part: float  # adjusted 4 M R^5 / (3^(n+1) c), the W1 share of the tail


def remainder_flux_formula(n: int, M: float, R: float, c: float) -> float:
    """M R^5 / c * n e^(1 - n)."""
    return M * R ** 5 / c * n * math.exp(1.0 - n)


def remainder_threshold(R: float, c: float) -> float:
    """30 (log(R/c) + 10)."""
    return 30.0 * (math.log(R / c) + 10.0)


def remainder_threshold_unsimplified(R: float, c: float, beta: float = DEFAULT_BETA) -> float:
    """(2 + 2/beta + log(R/c)) max{4 e^2, 2 e^(1 + 1/(1-beta)) / (1-beta)}."""
    factor = max(4.0 * math.e ** 2, 2.0 * math.exp(1.0 + 1.0 / (1.0 - beta)) / (1.0 - beta))
    return (2.0 + 2.0 / beta + math.log(R / c)) * factor


def remainder_flux_bound(n: int, params: ProblemParams, norm: JNormalization | None = None,
                         beta: float = DEFAULT_BETA) -> RemainderBound:
    """Bound on the mass flux of the tail sum_{i >= n} of the series."""
    if n < 1:
        raise InvalidArgument("n must be >= 1")
    ratio = (norm or default_normalization()).ratio
    M, R, c = params.M, params.R, params.c
    raw = remainder_flux_formula(n, M, R, c)
    thr = remainder_threshold(R, c)
    return RemainderBound(n, ratio * raw, raw, n > thr, thr,
                          remainder_threshold_unsimplified(R, c, beta),
                          ratio * 4.0 * M * R ** 5 / (3.0 ** (n + 1) * c))


def _small_r0(xi0, params: ProblemParams):
    xi0, r0 = _return_velocity(xi0, params)
    if not r0 < params.c / 2:
        raise InvalidArgument("this bound needs r0 < c/2")
    return xi0, r0


def i1_sum_bound(xi0, params: ProblemParams, norm: JNormalization | None = None) -> float:
    """(M / 2 pi) R^3.5 / (c r0^1.5 |xi0^1|) log(R/r0), times the normalization ratio."""
    xi0, r0 = _small_r0(xi0, params)
    ratio = (norm or default_normalization()).ratio
    M, R, c = params.M, params.R, params.c
    return ratio * M / (2 * math.pi) * R ** 3.5 / (c * r0 ** 1.5 * abs(xi0[0])) * math.log(R / r0)


def i2_sum_bound(xi0, rp: RegionParams, params: ProblemParams, norm: JNormalization | None = None,
                 literal: bool = False) -> float:
    """Bound on sum_n I2^n for r0 < c/2.

    (M / 4 pi^2) R^3 / (c r0 |xi0^1|) P L^beta exp(C1 L^beta) with
    L = |log(c / (D r0))| and C1 = 4 log(RD/c).  Summing the series gives
    exp(C1 L^beta) - 1 <= C1 L^beta exp(C1 L^beta), so P = C1; the printed
    form has P = log(RD/c), a factor 4 smaller, selected by ``literal=True``.
    """
    xi0, r0 = _small_r0(xi0, params)
    ratio = (norm or default_normalization()).ratio
    M, R, c, D, beta = params.M, params.R, params.c, rp.D, rp.beta
    logRD = math.log(R * D / c)
    C1 = 4.0 * logRD
    L = abs(math.log(c / (D * r0)))
    P = logRD if literal else C1
    return ratio * M / (4 * math.pi ** 2) * R ** 3 / (c * r0 * abs(xi0[0])) * P * L ** beta \
        * math.exp(C1 * L ** beta)


def pointwise_bound_outer(xi0, n: int, params: ProblemParams, norm: JNormalization | None = None) -> float:
    """(1 / 2 pi) (R^3 / r0^3) (2^n / n!) log^n(R/r0) M for r0 > c/2 (0 for r0 >= R)."""
    xi0, r0 = _return_velocity(xi0, params)
    if not r0 > params.c / 2:
        raise InvalidArgument("the outer pointwise bound needs r0 > c/2")
    if r0 >= params.R:
        return 0.0
    ratio = (norm or default_normalization()).ratio
    R, M = params.R, params.M
    return ratio * (R ** 3 / r0 ** 3) * 2.0 ** n / math.factorial(n) * math.log(R / r0) ** n * M \
        / (2 * math.pi)


def _delta_D(delta: float, beta: float) -> float:
    """D with ((D - 1)/pi)^beta >= 3/delta, never below the default choice."""
    return max(choose_D(beta), 1.0 + math.pi * (3.0 / delta) ** (1.0 / beta))


def singularity_constant(delta: float, params: ProblemParams, beta: float = DEFAULT_BETA,
                         norm: JNormalization | None = None) -> float:
    """C_delta such that f(xi0) <= C_delta M R^3 / (c |xi0^1| r0^(1+delta)) for r0 < c/2.

    D is raised so that ((D - 1)/pi)^beta >= 3/delta; then the W1 part sums to
    at most (1/2pi) R^3/(c r0 |xi0^1|) ((R/r0)^q - 1) with
    q = 2 (1 + 1/pi) ((D - 1)/pi)^(-beta) < delta, and the W2 part is the
    corrected I2 sum bound.  C_delta is the supremum over r0 in (0, c/2] of
    their sum times c |xi0^1| r0^(1+delta) / (M R^3); the supremum is finite
    because both parts grow slower than r0^(-delta) times the prefactor.
    """
    if not 0.0 < delta < 1.0:
        raise InvalidArgument("delta must lie in (0, 1)")
    ratio = (norm or default_normalization()).ratio
    c, R = params.c, params.R
    D = _delta_D(delta, beta)
    q = 2.0 * (1.0 + 1.0 / math.pi) * ((D - 1.0) / math.pi) ** (-beta)
    logRD = math.log(R * D / c)
    C1 = 4.0 * logRD

    def log_scaled(t):
        # t = log(c / (2 r0)) >= 0; log of the normalized bound times r0^delta
        log_r0 = math.log(0.5 * c) - t
        qu = q * (math.log(R) - log_r0)
        log1 = qu + math.log(-math.expm1(-qu)) - math.log(2 * math.pi)
        L = abs(math.log(c / D) - log_r0)
        log2 = math.log(C1 / (4 * math.pi ** 2)) + beta * math.log(L) + C1 * L ** beta if L > 0 else -math.inf
        return float(np.logaddexp(log1, log2)) + delta * log_r0

    # the maximizer of C1 L^beta - delta log(1/r0) sits near L = (C1 beta / delta)^(1/(1-beta))
    t_star = (C1 * beta / delta) ** (1.0 / (1.0 - beta)) + math.log(2 * D)
    hi_t = 4.0 * t_star + 50.0
    grid = np.linspace(0.0, hi_t, 4001)
    vals = np.array([log_scaled(t) for t in grid])
    j = int(np.argmax(vals))
    a, b = grid[max(j - 1, 0)], grid[min(j + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(lambda t: -log_scaled(t), bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-10})
    best = max(vals[j], -res.fun)
    return ratio * math.exp(best)


def singularity_envelope(xi0, delta: float, params: ProblemParams, beta: float = DEFAULT_BETA,
                         norm: JNormalization | None = None) -> float:
    """C_delta M R^3 / (c |xi0^1| r0^(1+delta)) for r0 < c/2."""
    xi0, r0 = _small_r0(xi0, params)
    C = singularity_constant(delta, params, beta, norm)
    return C * params.M * params.R ** 3 / (params.c * abs(xi0[0]) * r0 ** (1.0 + delta))


def convolution_check(a: float, b: float, norm: JNormalization | None = None) -> dict:
    """One forward and one backward exponential flight meeting at x = 0.

    The k-integral of 1/((ik + a)(b - ik)) times ab is 2 pi times the overlap
    int_0^inf a e^(-a s) b e^(-b s) ds of the two path-length densities;
    compare that to J^{1,1}(a, b).
    """
    if a <= 0 or b <= 0:
        raise InvalidArgument("rates must be > 0")
    norm = norm or default_normalization()
    overlap, err = integrate.quad(lambda s: a * math.exp(-a * s) * b * math.exp(-b * s), 0.0, math.inf,
                                  epsabs=1e-15, epsrel=1e-13)
    conv = 2.0 * math.pi * overlap
    J = j_pair(a, b, norm)
    return {"a": a, "b": b, "convolution": conv, "j11": J, "relative_difference": abs(conv - J) / J}


def normalization_report(norm: JNormalization | None = None) -> dict:
    """kappa, the stated base constant, and the factor applied to every bound."""
    norm = norm or default_normalization()
    rep = norm.report()
    rep["adjusted_bounds"] = ["i1_sum_bound", "i2_sum_bound", "pointwise_bound_outer",
                              "singularity_constant", "remainder_flux_bound"]
    return rep
