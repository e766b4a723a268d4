"""Compiled kernels against their pure-Python twins.

    python benchmarks/bench_kernels.py [--repeat 3]

Each kernel runs on the same inputs under both backends; the outputs are
compared bit for bit and the best wall time of ``--repeat`` runs is printed.
The Python backend gets smaller workloads and the timings are scaled to the
compiled workload size.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from coldwall.backend import BACKENDS
from coldwall.distributions import shellcap
from coldwall.geometry import ProblemParams
from coldwall.rng import DOMAIN_SIMULATE, STREAM_FLIGHT
from coldwall.simulation import emit_block


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def bench_uniforms(mod, size):
    c0 = np.arange(size, dtype=np.uint64)
    out = np.empty((size, 4))

    def run():
        mod.uniforms_block(c0, 7, 1, 12345, DOMAIN_SIMULATE, out)
        return out.copy()
    return run


def bench_simulate(mod, size):
    params = ProblemParams(1.0, 2.0)
    xi = emit_block(shellcap(params), 0, size, 0, BACKENDS["python"])

    def run():
        status = np.zeros(size, dtype=np.int32)
        ncoll = np.zeros(size, dtype=np.int32)
        vel = np.zeros((size, 3))
        cross = np.zeros(65, dtype=np.int64)
        mod.simulate_block(xi, 0, 0, DOMAIN_SIMULATE, STREAM_FLIGHT, 1.0, 1.0, 64, 1e6, 1_000_000, 0,
                           status, ncoll, vel, cross)
        return np.concatenate([status, ncoll, vel.ravel()])
    return run


def bench_j_effective(mod, size, k=6):
    rng = np.random.default_rng(1)
    rates = np.exp(rng.uniform(-2, 2, (size, k)))
    fwd = (rng.random((size, k)) < 0.5).astype(np.uint8)
    fwd[:, 0] = 0
    fwd[:, -1] = 1

    def run():
        return np.asarray(mod.j_effective(rates, fwd, np.pi, True))
    return run


KERNELS = {
    "uniforms_block": (bench_uniforms, 1_000_000, 20_000),
    "simulate_block": (bench_simulate, 100_000, 2_000),
    "j_effective": (bench_j_effective, 100_000, 5_000),
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if "compiled" not in BACKENDS:
        print("compiled extension not built; only the Python backend is available")
        return 1
    print(f"{'kernel':<16} {'compiled':>12} {'python':>12} {'speedup':>9}  identical")
    for name, (make, n_fast, n_slow) in KERNELS.items():
        t_c, out_c = _best(make(BACKENDS["compiled"], n_fast), args.repeat)
        t_p, out_p = _best(make(BACKENDS["python"], n_slow), 1)
        # the first n_slow items of the compiled run cover the same inputs
        _, out_c_small = _best(make(BACKENDS["compiled"], n_slow), 1)
        t_p_scaled = t_p * n_fast / n_slow
        same = np.array_equal(out_c_small, out_p)
        print(f"{name:<16} {t_c:>11.4f}s {t_p_scaled:>11.2f}s {t_p_scaled / t_c:>8.0f}x  {same}"
              f"   ({n_fast} items; python timed on {n_slow} and scaled)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
