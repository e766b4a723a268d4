"""Counter-based random numbers.

Philox4x64-10 keyed by ``(seed, domain)`` and addressed by a 4-word counter.
Given the same key and counter the output is the same regardless of how work
is split across threads or chunks, which is what makes ensemble results
independent of the worker count.  The block function is bit-identical to
``numpy.random.Philox`` (checked in the tests), with three implementations:
vectorized numpy here, scalar Python here, and C in the compiled kernel.

Uniforms are ``((x >> 12) + 0.5) * 2**-52``, strictly inside (0, 1).
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
PHILOX_M0 = 0xD2E7470EE14C6C93
PHILOX_M1 = 0xCA5A826395121157
PHILOX_W0 = 0x9E3779B97F4A7C15
PHILOX_W1 = 0xBB67AE8584CAA73B
ROUNDS = 10
UNIFORM_SCALE = 2.0 ** -52

# second key word: separates the simulator from other consumers of a seed
DOMAIN_SIMULATE = 0x5349_4D55  # "SIMU"
# third counter word inside the simulator
STREAM_EMIT = 1
STREAM_FLIGHT = 2

_M0 = np.uint64(PHILOX_M0)
_M1 = np.uint64(PHILOX_M1)
_W0 = np.uint64(PHILOX_W0)
_W1 = np.uint64(PHILOX_W1)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)


def _mulhilo(a: np.uint64, b: np.ndarray):
    """Full 64x64 -> 128 bit product of a scalar and an array, as (hi, lo)."""
    a_lo, a_hi = a & _LO32, a >> _S32
    b_lo, b_hi = b & _LO32, b >> _S32
    lolo = a_lo * b_lo
    hilo = a_hi * b_lo
    lohi = a_lo * b_hi
    hihi = a_hi * b_hi
    cross = (lolo >> _S32) + (hilo & _LO32) + lohi
    hi = hihi + (hilo >> _S32) + (cross >> _S32)
    lo = a * b
    return hi, lo


def philox_np(c0, c1, c2, c3, k0: int, k1: int):
    """Vectorized Philox4x64-10 block; counters are broadcastable uint64 arrays."""
    c0, c1, c2, c3 = np.broadcast_arrays(*(np.asarray(x, dtype=np.uint64) for x in (c0, c1, c2, c3)))
    c0, c1, c2, c3 = (x.copy() for x in (c0, c1, c2, c3))
    key0, key1 = np.uint64(k0 & MASK64), np.uint64(k1 & MASK64)
    with np.errstate(over="ignore"):
        for _ in range(ROUNDS):
            hi0, lo0 = _mulhilo(_M0, c0)
            hi1, lo1 = _mulhilo(_M1, c2)
            c0, c1, c2, c3 = hi1 ^ c1 ^ key0, lo1, hi0 ^ c3 ^ key1, lo0
            key0 = key0 + _W0
            key1 = key1 + _W1
    return c0, c1, c2, c3


def philox_py(c0: int, c1: int, c2: int, c3: int, k0: int, k1: int):
    """Scalar Philox4x64-10 on Python integers."""
    for _ in range(ROUNDS):
        p0 = PHILOX_M0 * c0
        p1 = PHILOX_M1 * c2
        c0, c1, c2, c3 = ((p1 >> 64) ^ c1 ^ k0, p1 & MASK64, (p0 >> 64) ^ c3 ^ k1, p0 & MASK64)
        k0 = (k0 + PHILOX_W0) & MASK64
        k1 = (k1 + PHILOX_W1) & MASK64
    return c0, c1, c2, c3


def to_uniform_np(x: np.ndarray) -> np.ndarray:
    return ((x >> np.uint64(12)).astype(np.float64) + 0.5) * UNIFORM_SCALE


def to_uniform_py(x: int) -> float:
    return ((x >> 12) + 0.5) * UNIFORM_SCALE


def uniforms4(seed: int, domain: int, c0, c1, c2) -> np.ndarray:
    """Four uniforms per counter ``(c0, c1, c2, 0)``; shape ``broadcast + (4,)``."""
    words = philox_np(c0, c1, c2, 0, seed, domain)
    return np.stack([to_uniform_np(w) for w in words], axis=-1)


def chunk_generator(seed: int, chunk_index: int) -> np.random.Generator:
    """Independent numpy generator for one work chunk of a Monte Carlo estimate.

    Keyed by (seed, chunk_index) so the estimate depends only on the seed and
    the chunk size, never on which thread ran which chunk.
    """
    if seed < 0 or chunk_index < 0:
        raise ValueError("seed and chunk index must be non-negative")
    return np.random.Generator(np.random.Philox(key=[seed & MASK64, chunk_index]))


def chunk_sizes(total: int, chunk: int):
    """Split ``total`` samples into fixed-size chunks (the last one shorter)."""
    full, rest = divmod(int(total), int(chunk))
    return [chunk] * full + ([rest] if rest else [])
