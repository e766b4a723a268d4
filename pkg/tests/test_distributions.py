import math

import numpy as np
import pytest
from scipy import integrate

from coldwall import InvalidArgument, ProblemParams
from coldwall.distributions import (
    OutgoingDistribution, combine, disk, from_spec, gauss, gaussbump, make_outgoing, maxwellian, shellcap,
    shellcap_test, zero,
)


def test_shellcap_flux_closed_form(params):
    # flux of the indicator: int_c^R int_{c/r}^1 2 pi r^2 (r x - c) dx dr
    c, R = params.c, params.R
    expected, _ = integrate.quad(lambda r: 2 * math.pi * r * r * (r * (1 - (c / r) ** 2) / 2 - c * (1 - c / r)), c, R)
    f = shellcap(params)
    assert f.total_flux == pytest.approx(expected, rel=1e-6)
    assert f.amplitude == params.M


def test_outgoing_support(fplus, params):
    pts = np.array([[0.5, 0.0, 0.0], [-0.1, 0.0, 0.0], [1.5, 0.0, 0.0], [0.01, 0.0, 0.0]])
    # inside; xi^1 < 0; outside R; just inside the wall (xi^1 > 0 forces |xi - c| > c)
    assert fplus.evaluate(pts).tolist() == [1.0, 0.0, 0.0, 1.0]


def test_amplitude_must_not_exceed_M(params):
    with pytest.raises(InvalidArgument):
        shellcap(params, amplitude=2.0)
    assert shellcap(params, amplitude=0.0).total_flux == 0.0


def test_flux_sampler_is_flux_weighted(fplus, params):
    xi = fplus.flux_sample(np.random.default_rng(0), 200_000)
    assert np.all(xi[:, 0] > 0)
    r = np.linalg.norm(xi - params.beam, axis=1)
    assert r.min() >= params.c and r.max() <= params.R
    # mean of xi^1 under xi^1 f+ / F equals int (xi^1)^2 f+ / F
    c, R = params.c, params.R
    second, _ = integrate.dblquad(lambda x, r: 2 * math.pi * r * r * (r * x - c) ** 2, c, R,
                                  lambda r: c / r, lambda r: 1.0)
    assert xi[:, 0].mean() == pytest.approx(second / fplus.total_flux, rel=0.01)


def test_gaussbump_defaults(params):
    g = gaussbump(params)
    assert g.options["center"] == [0.5, 0.0, 0.0]
    assert g.options["width"] == 0.25
    assert float(g.evaluate(np.array([0.5, 0.0, 0.0]))) == pytest.approx(1.0)
    assert g.total_flux > 0
    with pytest.raises(InvalidArgument):
        gaussbump(params, width=0.0)


def test_make_outgoing(params):
    assert make_outgoing("shellcap", params).name == "shellcap"
    assert make_outgoing({"name": "gaussbump", "width": 0.3}, params).options["width"] == 0.3
    with pytest.raises(InvalidArgument):
        make_outgoing({"name": "nope"}, params)


def test_gauss_mass():
    g = gauss((0.5, -0.2, 0.1), 0.7, 2.5)
    val, _ = integrate.tplquad(lambda z, y, x: float(g(np.array([x, y, z]))), -6, 6, -6, 6, -6, 6,
                               epsabs=1e-6)
    assert val == pytest.approx(2.5, rel=1e-4)
    assert maxwellian(2.0).scale == pytest.approx(math.sqrt(2.0))


def test_catalog_and_combine():
    assert from_spec("gauss((1,0,0),0.5)").center.tolist() == [1.0, 0.0, 0.0]
    assert from_spec("disk(0.5)")(np.array([0.2, 0.0, 0.0])) == 1.0
    assert from_spec("maxwellian(1.0)").scale == 1.0
    with pytest.raises(InvalidArgument):
        from_spec("banana(1)")
    with pytest.raises(InvalidArgument):
        from_spec("gauss((1,0,0")
    h = combine([(2.0, disk(1.0)), (1.0, zero())])
    assert h(np.array([0.0, 0.0, 0.0])) == 2.0
    with pytest.raises(InvalidArgument):
        combine([(-1.0, disk(1.0))])
    s = shellcap_test(1.0, 2.0)
    assert s(np.array([0.5, 0.0, 0.0])) == 1.0


def test_outgoing_rejects_amplitude_outside_range():
    p = ProblemParams(1.0, 2.0, M=0.5)
    with pytest.raises(InvalidArgument):
        OutgoingDistribution("x", p, lambda xi: np.ones(xi.shape[:-1]), 0.6)
