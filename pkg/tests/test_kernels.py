"""Compiled kernels and their pure-Python twins must agree bit for bit."""

import math

import numpy as np
import pytest

from coldwall.backend import BACKENDS
from coldwall.jintegrals import JNormalization, RateParams, j_recursive
from coldwall.rng import DOMAIN_SIMULATE, STREAM_FLIGHT
from coldwall.simulation import emit_block

needs_compiled = pytest.mark.skipif("compiled" not in BACKENDS, reason="extension not built")


def _rates(S=500, K=6, seed=0):
    rng = np.random.default_rng(seed)
    r = np.exp(rng.uniform(-2, 2, (S, K)))
    f = (rng.random((S, K)) < 0.5).astype(np.uint8)
    f[:, 0] = 0
    f[:, -1] = 1
    return r, f


def test_whole_line_is_plain_J():
    r, f = _rates()
    n = JNormalization(math.pi)
    w = np.asarray(BACKENDS["python"].j_effective(r, f, math.pi, False))
    for i in range(100):
        assert w[i] == pytest.approx(j_recursive(RateParams(r[i][f[i] == 1], r[i][f[i] == 0]), n), rel=1e-12)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_absorbing_between_zero_and_whole_line(name):
    r, f = _rates(2000, 7, 1)
    mod = BACKENDS[name]
    w = np.asarray(mod.j_effective(r, f, math.pi, False))
    a = np.asarray(mod.j_effective(r, f, math.pi, True))
    assert np.all(a >= -1e-12)
    assert np.all(a <= w * (1 + 1e-12))


def test_absorbing_equals_whole_line_with_one_crossing():
    # return rate first, then only forward rates: a single crossing of x = 0
    r, _ = _rates(300, 4, 2)
    f = np.ones_like(r, dtype=np.uint8)
    f[:, 0] = 0
    mod = BACKENDS["python"]
    assert np.allclose(mod.j_effective(r, f, math.pi, True), mod.j_effective(r, f, math.pi, False), rtol=1e-13)


@needs_compiled
@pytest.mark.parametrize("absorbing", [False, True])
def test_j_effective_backends_identical(absorbing):
    r, f = _rates(1000, 6, 3)
    a = np.asarray(BACKENDS["compiled"].j_effective(r, f, math.pi, absorbing))
    b = np.asarray(BACKENDS["python"].j_effective(r, f, math.pi, absorbing))
    assert np.array_equal(a, b)


@needs_compiled
@pytest.mark.parametrize("transparent", [0, 1])
def test_simulate_block_backends_identical(fplus, transparent):
    n = 1500
    xi = emit_block(fplus, 0, n, 11, BACKENDS["python"])
    results = []
    for name in ("compiled", "python"):
        status = np.zeros(n, dtype=np.int32)
        ncoll = np.zeros(n, dtype=np.int32)
        vel = np.zeros((n, 3))
        cross = np.zeros(33, dtype=np.int64)
        out = BACKENDS[name].simulate_block(xi, 0, 11, DOMAIN_SIMULATE, STREAM_FLIGHT, 1.0, 1.0, 32, 1e6,
                                            1_000_000, transparent, status, ncoll, vel, cross)
        results.append((tuple(out), status, ncoll, vel, cross))
    (o1, s1, n1, v1, c1), (o2, s2, n2, v2, c2) = results
    assert o1 == o2
    assert np.array_equal(s1, s2) and np.array_equal(n1, n2) and np.array_equal(v1, v2)
    assert np.array_equal(c1, c2)


@needs_compiled
def test_philox_block_backends_identical():
    for c in (0, 1, 2 ** 63, 2 ** 64 - 1):
        a = BACKENDS["compiled"].philox_block(c, c ^ 1, 7, 0, 5, 2 ** 64 - 6)
        b = BACKENDS["python"].philox_block(c, c ^ 1, 7, 0, 5, 2 ** 64 - 6)
        assert [int(x) for x in a] == [int(x) for x in b]
