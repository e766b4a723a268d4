import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import integrate

from coldwall import InvalidArgument, ProblemParams
from coldwall.distributions import gaussbump, shellcap
from coldwall.series import (
    SeriesTermEstimate, convolution_check, f_minus_1_quad, f_minus_n_mc, f_minus_series, flux_integral,
    i1_sum_bound, i2_sum_bound, normalization_report, pointwise_bound_outer, region_params,
    remainder_flux_bound, remainder_flux_formula, remainder_threshold, remainder_threshold_unsimplified,
    singularity_constant, singularity_envelope, split_I1_I2, term_with_split,
)

POINTS = [(-0.5, 0.5, 0.0), (-1.0, 0.25, 0.0), (-0.8, 0.3, -0.2)]


def one_collision_oracle(xi0, c=1.0, R=2.0):
    """Nested scipy quad over (alpha, phi) for the shellcap profile with unit amplitude.

    The phi range is the arc with xi_1^1 > 0 and the alpha integral is split
    where that arc opens.
    """
    xi0 = np.asarray(xi0, dtype=float)
    beam = np.array([-c, 0.0, 0.0])
    d = xi0 - beam
    r0 = np.linalg.norm(d)
    u = d / r0
    t1 = np.cross([0.0, 0.0, 1.0], u)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(u, t1)
    A = math.hypot(t1[0], t2[0])
    psi = math.atan2(t2[0], t1[0])
    b0 = math.pi * r0 / abs(xi0[0])
    lo, hi = math.acos(min(1.0, r0 / c)), math.acos(r0 / R)

    def inner(al):
        l, r1 = r0 * math.tan(al), r0 / math.cos(al)
        q = -xi0[0] / (l * A) if l > 0 else math.inf
        if q >= 1:
            return 0.0
        h = math.acos(q)

        def g(phi):
            x1 = xi0[0] + l * (math.cos(phi) * t1[0] + math.sin(phi) * t2[0])
            if x1 <= 0:
                return 0.0
            a = math.pi * r1 / x1
            return 2 * math.pi * a * b0 / (a + b0) * x1 / r1

        v, _ = integrate.quad(g, psi - h, psi + h, epsabs=1e-14, epsrel=1e-12, limit=200)
        return math.sin(al) / math.cos(al) ** 3 * v

    opening = math.atan(abs(xi0[0]) / (A * r0))
    pts = [opening] if lo < opening < hi else None
    v, _ = integrate.quad(inner, lo, hi, points=pts, epsabs=1e-14, epsrel=1e-11, limit=400)
    return v / (2 * math.pi ** 3)


# frozen from the oracle above
F1_FROZEN = {POINTS[0]: 0.38855517801344, POINTS[1]: 0.66708187792482, POINTS[2]: 0.47655887213060}


@pytest.mark.parametrize("xi0", POINTS)
def test_one_collision_quadrature_matches_oracle(xi0, fplus, norm):
    val = f_minus_1_quad(xi0, fplus, norm=norm)
    assert val == pytest.approx(one_collision_oracle(xi0), rel=1e-8)
    assert val == pytest.approx(F1_FROZEN[xi0], rel=1e-8)


@pytest.mark.parametrize("sampler", ["rejection", "simplex"])
def test_one_collision_mc_matches_quadrature(fplus, norm, sampler):
    for xi0 in POINTS[:2]:
        est = f_minus_n_mc(xi0, 1, fplus, 200_000, seed=3, sampler=sampler, norm=norm)
        assert abs(est.value - F1_FROZEN[xi0]) < 4 * est.stderr
        assert est.method == "mc" and est.sampler == sampler


def test_support_zero_beyond_R(fplus, norm):
    xi0 = (-4.0, 0.0, 0.0)  # r0 = 3 > R
    assert f_minus_1_quad(xi0, fplus, norm=norm) == 0.0
    for n in (1, 2, 3):
        assert f_minus_n_mc(xi0, n, fplus, 10_000, norm=norm).value == 0.0
    assert pointwise_bound_outer(xi0, 2, fplus.params, norm) == 0.0


def test_plane_parallel_to_wall_gives_zero(fplus, norm):
    # xi0 - c along e1: every chain velocity keeps xi^1 = xi0^1 < 0
    assert f_minus_1_quad((-0.5, 0.0, 0.0), fplus, norm=norm) == 0.0


def test_split_adds_up_exactly(fplus, norm):
    xi0 = (-0.999, 0.0005, 0.0)  # r0 ~ 1e-3, both parts populated
    I1, I2, tot = term_with_split(xi0, 3, fplus, 50_000, seed=1, sampler="simplex", norm=norm,
                                  D=5.0)
    assert tot.value == I1.value + I2.value
    assert I1.value > 0 and I2.value > 0
    a, b = split_I1_I2(xi0, 3, fplus, 50_000, seed=1, sampler="simplex", norm=norm, D=5.0)
    assert (a, b) == (I1, I2)


def test_boundary_modes_agree_for_two_collisions(fplus, norm):
    xi0 = POINTS[0]
    for n in (1, 2):
        a = f_minus_n_mc(xi0, n, fplus, 20_000, seed=2, boundary="absorbing", norm=norm)
        w = f_minus_n_mc(xi0, n, fplus, 20_000, seed=2, boundary="whole_line", norm=norm)
        assert a.value == pytest.approx(w.value, rel=1e-12)
    a = f_minus_n_mc(xi0, 3, fplus, 20_000, seed=2, boundary="absorbing", norm=norm)
    w = f_minus_n_mc(xi0, 3, fplus, 20_000, seed=2, boundary="whole_line", norm=norm)
    assert a.value < w.value


def test_seed_determinism_and_validation(fplus, norm):
    a = f_minus_n_mc(POINTS[0], 2, fplus, 10_000, seed=5, norm=norm)
    assert a == f_minus_n_mc(POINTS[0], 2, fplus, 10_000, seed=5, norm=norm)
    with pytest.raises(InvalidArgument):
        f_minus_n_mc((0.5, 0.0, 0.0), 1, fplus, 1000, norm=norm)
    with pytest.raises(InvalidArgument):
        f_minus_n_mc(POINTS[0], 1, fplus, 1000, boundary="reflecting", norm=norm)
    with pytest.raises(InvalidArgument):
        SeriesTermEstimate(1, -1.0, 0.0, 10, "mc")


@settings(max_examples=25, deadline=None)
@given(st.floats(-3.0, -0.05), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.integers(1, 4))
def test_terms_nonnegative(x, y, z, n):
    assume((x, y, z) != (-1.0, 0.0, 0.0))  # the beam velocity itself is rejected
    fp = shellcap(ProblemParams(1.0, 2.0))
    est = f_minus_n_mc((x, y, z), n, fp, 2000, seed=0)
    assert est.value >= 0 and est.stderr >= 0


def test_series_partial_sum(fplus, norm):
    partial, terms, rem = f_minus_series(POINTS[0], 3, fplus, 20_000, norm=norm)
    assert partial == pytest.approx(sum(t.value for t in terms))
    assert [t.n for t in terms] == [1, 2, 3]
    assert rem == remainder_flux_bound(4, fplus.params, norm).value


def test_flux_one_collision_frozen(fplus, norm):
    # fraction of the emitted flux returning after one collision; agrees with the simulator
    est = flux_integral(1, fplus, norm=norm)
    assert est.value / fplus.total_flux == pytest.approx(0.40555, abs=5e-5)
    assert est.method == "mc" and est.sampler == "rqmc"


def test_flux_terms_decrease(fplus, norm):
    vals = [flux_integral(n, fplus, 1 << 12, 4, norm=norm).value for n in (1, 2, 3, 4)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_remainder_formulas():
    p = ProblemParams(1.0, 2.0, M=0.5)
    for n in (1, 5, 40):
        assert remainder_flux_formula(n, 0.5, 2.0, 1.0) == 0.5 * 32.0 * n * math.exp(1 - n)
    assert remainder_threshold(2.0, 1.0) == 30 * (math.log(2.0) + 10)
    rb = remainder_flux_bound(400, p)
    assert rb.valid and not remainder_flux_bound(300, p).valid
    assert rb.value == pytest.approx(4 * math.pi ** 2 * rb.raw, rel=1e-12)
    beta = 0.25
    factor = max(4 * math.e ** 2, 2 * math.exp(1 + 1 / (1 - beta)) / (1 - beta))
    assert remainder_threshold_unsimplified(2.0, 1.0, beta) == pytest.approx((2 + 2 / beta + math.log(2)) * factor)
    with pytest.raises(InvalidArgument):
        remainder_flux_bound(0, p)


def test_sum_bounds(params, norm):
    xi0 = (-0.95, 0.1, 0.0)  # r0 ~ 0.11 < c/2
    rp = region_params(xi0, params, 1)
    corrected = i2_sum_bound(xi0, rp, params, norm)
    literal = i2_sum_bound(xi0, rp, params, norm, literal=True)
    assert corrected == pytest.approx(4 * literal, rel=1e-12)
    assert i1_sum_bound(xi0, params, norm) > 0
    with pytest.raises(InvalidArgument):
        i1_sum_bound(POINTS[0], params, norm)
    with pytest.raises(InvalidArgument):
        pointwise_bound_outer((-0.95, 0.1, 0.0), 1, params, norm)


def test_outer_bound_dominates_terms(fplus, norm):
    xi0 = POINTS[0]
    for n in (1, 2, 3):
        est = f_minus_n_mc(xi0, n, fplus, 20_000, norm=norm)
        assert est.value <= pointwise_bound_outer(xi0, n, fplus.params, norm)


def test_singularity_constant(params, norm):
    c = [singularity_constant(d, params, norm=norm) for d in (0.1, 0.3, 0.6)]
    assert all(math.isfinite(x) and x > 0 for x in c)
    assert c[0] > c[1] > c[2]
    xi0 = (-0.99, 0.01, 0.0)
    env = singularity_envelope(xi0, 0.6, params, norm=norm)
    assert env > f_minus_1_quad(xi0, shellcap(params), norm=norm)
    with pytest.raises(InvalidArgument):
        singularity_constant(1.0, params)


def test_convolution_and_report(norm):
    for a, b in [(1.0, 1.0), (0.3, 5.0)]:
        assert convolution_check(a, b, norm)["relative_difference"] < 1e-12
    rep = normalization_report(norm)
    assert rep["ratio"] == pytest.approx(4 * math.pi ** 2)
    assert "remainder_flux_bound" in rep["adjusted_bounds"]


def test_other_profile(params, norm):
    g = gaussbump(params)
    val = f_minus_1_quad(POINTS[0], g, norm=norm)
    est = f_minus_n_mc(POINTS[0], 1, g, 100_000, seed=1, norm=norm)
    assert abs(est.value - val) < 4 * est.stderr
