import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coldwall import DegenerateState, InvalidArgument, ProblemParams
from coldwall.geometry import (
    chain_construct, chain_velocities, collide, make_plane_chart, plane_point, sample_scatter_normal,
    velocity,
)

coord = st.floats(-5, 5, allow_nan=False)
vec = st.tuples(coord, coord, coord)
P = ProblemParams(1.0, 2.0)


def _unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    return v / n if n > 1e-3 else None


@pytest.mark.parametrize("kw", [dict(c=0.0, R=2.0), dict(c=1.0, R=1.0), dict(c=1.0, R=2.0, M=0.0),
                                dict(c=1.0, R=2.0, rate_multiplier=-1.0), dict(c=math.nan, R=2.0)])
def test_problem_params_rejects_invalid(kw):
    with pytest.raises(InvalidArgument):
        ProblemParams(**kw)


def test_beam_velocity():
    assert np.array_equal(ProblemParams(1.5, 3.0).beam, [-1.5, 0.0, 0.0])


def test_velocity_validation():
    with pytest.raises(InvalidArgument):
        velocity([1.0, 2.0])
    with pytest.raises(InvalidArgument):
        velocity([1.0, math.inf, 0.0])


@settings(max_examples=300, deadline=None)
@given(vec, vec)
def test_collision_shrinks_distance_to_beam(xi, n):
    n = _unit(n)
    if n is None:
        return
    xi = np.array(xi)
    out = collide(xi, n, P)
    d_in = np.linalg.norm(xi - P.beam)
    d_out = np.linalg.norm(out - P.beam)
    assert d_out <= d_in * (1 + 1e-12) + 1e-15
    # |xi' - c|^2 = |xi - c|^2 - ((xi - c).n)^2
    assert d_out ** 2 == pytest.approx(d_in ** 2 - np.dot(xi - P.beam, n) ** 2, abs=1e-9)
    # the change is along n
    assert np.allclose(np.cross(xi - out, n), 0.0, atol=1e-9)


def test_collide_rejects_non_unit_normal():
    with pytest.raises(InvalidArgument):
        collide([0.0, 1.0, 0.0], [1.0, 1.0, 0.0], P)


def test_scatter_normal_degenerate_at_beam():
    with pytest.raises(DegenerateState):
        sample_scatter_normal(P.beam, P, np.random.default_rng(0))
    with pytest.raises(DegenerateState):
        make_plane_chart(P.beam, P)


def test_scatter_normal_cosine_weighting():
    xi = np.array([0.3, 0.4, -0.2])
    u = (xi - P.beam) / np.linalg.norm(xi - P.beam)
    n = sample_scatter_normal(xi, P, np.random.default_rng(1), size=200_000)
    mu = n @ u
    assert np.all(mu > 0)
    assert np.allclose(np.linalg.norm(n, axis=1), 1.0)
    # density 2 mu on (0, 1): mean 2/3, second moment 1/2
    assert mu.mean() == pytest.approx(2 / 3, abs=3e-3)
    assert (mu ** 2).mean() == pytest.approx(0.5, abs=3e-3)


def test_plane_chart_spans_perpendicular_plane():
    xi = np.array([-0.2, 0.7, 0.1])
    ch = make_plane_chart(xi, P)
    pts = plane_point(ch, np.array([0.3, 1.2]), np.array([0.1, 2.0]))
    assert np.allclose((pts - xi) @ ch.unit_normal, 0.0, atol=1e-14)
    with pytest.raises(InvalidArgument):
        plane_point(ch, -1.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(0.0, 1.4), st.floats(0.0, 2 * math.pi)), min_size=1, max_size=6),
       st.sampled_from(["standard", "axial"]))
def test_chain_inverts_collisions(steps, frame):
    xi0 = np.array([-0.5, 0.5, 0.1])
    alphas = np.array([a for a, _ in steps])
    phis = np.array([p for _, p in steps])
    ch = chain_construct(xi0, alphas, phis, P, frame)
    r0 = np.linalg.norm(xi0 - P.beam)
    assert ch.radii == pytest.approx(r0 / np.cumprod(np.concatenate([[1.0], np.cos(alphas)])))
    for i in range(1, ch.n + 1):
        prev, cur = ch.velocities[i - 1], ch.velocities[i]
        # xi_i lies on the plane of influence of xi_{i-1} at distance r_{i-1} tan(alpha_i)
        assert np.dot(cur - prev, prev - P.beam) == pytest.approx(0.0, abs=1e-9 * ch.radii[i] ** 2)
        l = np.linalg.norm(cur - prev)
        # angles enter through their cosines, so l is resolved to about sqrt(eps) r
        expected = ch.radii[i - 1] * math.tan(alphas[i - 1])
        assert l == pytest.approx(expected, rel=1e-7, abs=3e-8 * ch.radii[i - 1])
        assert np.linalg.norm(cur - P.beam) == pytest.approx(ch.radii[i], rel=1e-9)
        if l > 1e-9:
            # colliding xi_i with normal (xi_i - xi_{i-1})/l gives back xi_{i-1}
            assert collide(cur, (cur - prev) / l, P) == pytest.approx(prev, abs=1e-9 * ch.radii[i])


def test_chain_frames_agree_on_radii():
    rng = np.random.default_rng(3)
    x = rng.uniform(0.2, 1.0, (50, 4))
    ph = rng.uniform(0, 2 * np.pi, (50, 4))
    xi0 = np.tile([-0.5, 0.5, 0.0], (50, 1))
    _, ra = chain_velocities(xi0, x, ph, 1.0, "standard")
    _, rb = chain_velocities(xi0, x, ph, 1.0, "axial")
    assert np.allclose(ra, rb)


def test_chain_rejects_bad_input():
    with pytest.raises(InvalidArgument):
        chain_construct([0.1, 0.0, 0.0], [0.2], [0.0], P)
    with pytest.raises(InvalidArgument):
        chain_construct([-0.5, 0.0, 0.0], [math.pi / 2], [0.0], P)
    with pytest.raises(InvalidArgument):
        chain_construct([-0.5, 0.0, 0.0], [0.2, 0.3], [0.0], P)
