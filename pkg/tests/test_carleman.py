import math

import numpy as np
import pytest

from coldwall import DegenerateState
from coldwall import carleman
from coldwall.distributions import disk, from_spec, gauss, maxwellian, zero
from coldwall.quadrature import QuadratureSpec

Q = QuadratureSpec(relative_tolerance=1e-6)


def test_K_on_gaussian_matches_plane_marginal(params):
    # the plane integral of an isotropic Gaussian at distance h is mass N(h; 0, w^2)
    f = gauss((0.3, 0.2, -0.1), 0.5, 2.0)
    xi0 = np.array([-0.5, 0.5, 0.0])
    d = xi0 - params.beam
    r0 = np.linalg.norm(d)
    h = abs((f.center - xi0) @ d / r0)
    expected = 2.0 * math.exp(-h * h / (2 * 0.25)) / math.sqrt(2 * math.pi * 0.25) / r0
    assert carleman.K_apply(f, xi0, QuadratureSpec(1e-9), params) == pytest.approx(expected, rel=1e-7)


def test_K_on_ball_is_disk_area(params):
    # the plane through the centre of a unit ball cuts a disk of area pi
    xi0 = np.array([-0.5, 0.5, 0.0])
    r0 = np.linalg.norm(xi0 - params.beam)
    f = disk(1.0, center=xi0)
    assert carleman.K_apply(f, xi0, Q, params) == pytest.approx(math.pi / r0, rel=1e-6)


def test_K_degenerate_and_zero(params):
    with pytest.raises(DegenerateState):
        carleman.K_apply(gauss(), params.beam, Q, params)
    assert carleman.K_apply(zero(), [0.0, 1.0, 0.0], Q, params) == 0.0


def test_collision_frequency(params):
    assert carleman.collision_frequency([0.0, 0.0, 0.0], params) == pytest.approx(math.pi)


def test_gain_forms_agree_on_one_pair():
    f, g = from_spec("gauss((1,0,0),0.7)"), from_spec("gauss((0,1,0),0.9)")
    xi = (0.5, 0.4, 0.2)
    d = carleman.gain_direct(f, g, xi, Q)
    assert carleman.gain_carleman(f, g, xi, Q) == pytest.approx(d, rel=1e-4)
    assert carleman.gain_carleman(g, f, xi, Q) == pytest.approx(d, rel=1e-4)


def test_maxwellian_gain_identity():
    M = maxwellian(1.0)
    xi = np.array([1.0, 0.5, 0.0])
    q = carleman.gain_carleman(M, M, xi, Q)
    assert q == pytest.approx(math.pi * float(M(xi)) * carleman.maxwellian_loss_integral(1.0, xi), rel=1e-4)


def test_maxwellian_loss_integral_at_origin():
    # int M |xi_*| = sqrt(8 theta / pi) at xi = 0
    for th in (0.5, 2.0):
        assert carleman.maxwellian_loss_integral(th, [0.0, 0.0, 0.0]) == pytest.approx(
            math.sqrt(8 * th / math.pi), rel=1e-9)


def test_zero_inputs_give_zero():
    assert carleman.mollifier_terms(zero(), gauss(), (0, 0, 0), 0.1, Q) == (0.0, 0.0)
    with pytest.raises(ValueError):
        carleman.mollifier_terms(gauss(), gauss(), (0, 0, 0), 0.0, Q)
