"""Direct Monte Carlo of emitted particles in the half space x > 0.

A particle leaves the wall with velocity xi (xi^1 > 0), flies an exponential
distance with rate pi |xi - c| / |xi^1| per unit x, collides with a beam
particle and continues with the post-collision velocity.  The first time it
crosses x = 0 moving backwards it is recorded as a return together with its
collision count.  Only the distance x from the wall is tracked.

Randomness is counter based: every flight step of particle ``pid`` uses the
Philox block at counter (pid, step, stream) under key (seed, domain), and
emission draws from its own stream.  Results therefore depend only on the
seed and N, never on chunking or threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .backend import get_backend
from .distributions import OutgoingDistribution
from .errors import GrazingState, InvalidArgument
from .geometry import ProblemParams, collide, sample_scatter_normal, velocity
from .rng import DOMAIN_SIMULATE, STREAM_EMIT, STREAM_FLIGHT, chunk_sizes

SIM_CHUNK = 1 << 16
MAX_EMIT_ATTEMPTS = 100_000
REASONS = {1: "max_collisions", 2: "max_x", 3: "grazing", 4: "max_ticks"}
MODES = ("absorbing", "transparent")


@dataclass(frozen=True)
class SimLimits:
    max_collisions: int = 64
    max_x: float | None = None  # None: 1e6 R / (pi c)
    max_ticks: int = 1_000_000

    def resolve_max_x(self, params: ProblemParams) -> float:
        return self.max_x if self.max_x is not None else 1e6 * params.R / (math.pi * params.c)

    def __post_init__(self):
        if self.max_collisions < 1 or self.max_ticks < 1:
            raise InvalidArgument("limits must be >= 1")
        if self.max_x is not None and not self.max_x > 0:
            raise InvalidArgument("max_x must be > 0")


@dataclass
class ParticleState:
    x: float
    velocity: np.ndarray
    collisions: int = 0


@dataclass(frozen=True)
class ReturnRecord:
    velocity: np.ndarray
    collisions: int
    weight: float = 1.0


@dataclass(frozen=True)
class NonReturn:
    reason: str
    collisions: int
    velocity: np.ndarray


@dataclass
class EnsembleStats:
    emitted: int
    returned_by_n: np.ndarray  # int64 counts indexed by collision number
    non_returned: dict
    velocity_histogram: np.ndarray  # counts over (r0 bin, xi0^1 bin)
    r0_edges: np.ndarray
    xi1_edges: np.ndarray
    seed: int
    mode: str = "absorbing"
    crossings_by_n: np.ndarray | None = None  # transparent mode: backward crossings of x = 0
    shrink_violations: int = 0
    total_collisions: int = 0
    max_emitted_radius: float = 0.0
    max_return_radius: float = 0.0
    returns_outside_support: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def returned(self) -> int:
        return int(self.returned_by_n.sum())

    @property
    def non_returned_total(self) -> int:
        return int(sum(self.non_returned.values()))

    def fraction(self, n: int) -> float:
        counts = self.crossings_by_n if self.mode == "transparent" else self.returned_by_n
        return float(counts[n]) / self.emitted if self.emitted and n < len(counts) else 0.0

    def fraction_stderr(self, n: int) -> float:
        p = self.fraction(n)
        return math.sqrt(p * (1.0 - p) / self.emitted) if self.emitted else 0.0

    def r0_histogram(self) -> np.ndarray:
        return self.velocity_histogram.sum(axis=1)

    def check_conservation(self) -> bool:
        return self.emitted == self.returned + self.non_returned_total


def free_path_length(xi, params: ProblemParams, rng: np.random.Generator) -> float:
    """Exponential flight distance in x with rate multiplier * pi |xi - c| / |xi^1|."""
    xi = velocity(xi)
    if xi[0] == 0.0:
        raise GrazingState("xi^1 = 0: the particle neither advances nor returns")
    rate = params.rate_multiplier * math.pi * float(np.linalg.norm(xi - params.beam)) / abs(xi[0])
    return float(rng.exponential(1.0 / rate))


def emit(fplus: OutgoingDistribution, rng: np.random.Generator) -> np.ndarray:
    """One velocity with density xi^1 f+(xi) / total_flux."""
    return fplus.flux_sample(rng, 1)[0]


def run_particle(xi_init, params: ProblemParams, limits: SimLimits, rng: np.random.Generator):
    """Follow one particle from the wall; returns ReturnRecord or NonReturn.

    This is the readable reference loop built from the geometry primitives;
    ensembles use the batched kernel, which follows the same rules.
    """
    xi = velocity(xi_init)
    if not xi[0] > 0:
        raise InvalidArgument("emitted velocity must have xi^1 > 0")
    state = ParticleState(0.0, xi)
    max_x = limits.resolve_max_x(params)
    for _ in range(limits.max_ticks):
        try:
            L = free_path_length(state.velocity, params, rng)
        except GrazingState:
            return NonReturn("grazing", state.collisions, state.velocity)
        if state.velocity[0] < 0:
            if L >= state.x:
                return ReturnRecord(state.velocity, state.collisions)
            state.x -= L
        else:
            state.x += L
            if state.x > max_x:
                return NonReturn("max_x", state.collisions, state.velocity)
        if state.collisions >= limits.max_collisions:
            return NonReturn("max_collisions", state.collisions, state.velocity)
        normal = sample_scatter_normal(state.velocity, params, rng)
        state.velocity = collide(state.velocity, normal, params)
        state.collisions += 1
    return NonReturn("max_ticks", state.collisions, state.velocity)


def emit_block(fplus: OutgoingDistribution, pid_start: int, count: int, seed: int, backend=None) -> np.ndarray:
    """Flux-weighted velocities for particles pid_start .. pid_start + count - 1.

    Particle ``pid`` tries proposals at counters (pid, attempt, STREAM_EMIT)
    until one is accepted, so its velocity is independent of batching.
    """
    if fplus.total_flux <= 0:
        raise InvalidArgument("cannot emit from a distribution with zero flux")
    backend = backend or get_backend()
    pids = np.arange(pid_start, pid_start + count, dtype=np.uint64)
    out = np.empty((count, 3))
    pending = np.arange(count)
    u = np.empty((count, 4))
    for attempt in range(MAX_EMIT_ATTEMPTS):
        if pending.size == 0:
            return out
        buf = u[: pending.size]
        backend.uniforms_block(np.ascontiguousarray(pids[pending]), attempt, STREAM_EMIT, seed,
                               DOMAIN_SIMULATE, buf)
        xi, acc = fplus.propose(buf)
        out[pending[acc]] = xi[acc]
        pending = pending[~acc]
    raise InvalidArgument("emission acceptance is too low; check the outgoing distribution")


def _histogram_edges(params: ProblemParams, bins: tuple[int, int]):
    return np.linspace(0.0, params.R, bins[0] + 1), np.linspace(-(params.c + params.R), 0.0, bins[1] + 1)


def _run_chunk(args):
    (start, size, fplus, params, limits, seed, mode, backend, edges) = args
    xi = emit_block(fplus, start, size, seed, backend)
    status = np.zeros(size, dtype=np.int32)
    ncoll = np.zeros(size, dtype=np.int32)
    vel = np.zeros((size, 3))
    crossings = np.zeros(limits.max_collisions + 1, dtype=np.int64)
    viol, tot = backend.simulate_block(xi, start, seed, DOMAIN_SIMULATE, STREAM_FLIGHT, params.c,
                                       params.rate_multiplier, limits.max_collisions,
                                       limits.resolve_max_x(params), limits.max_ticks,
                                       1 if mode == "transparent" else 0, status, ncoll, vel, crossings)
    ret = status == 0
    by_n = np.bincount(ncoll[ret], minlength=limits.max_collisions + 1).astype(np.int64)
    reasons = {name: int(np.count_nonzero(status == code)) for code, name in REASONS.items()}
    r_emit = np.linalg.norm(xi - params.beam, axis=1)
    r_ret = np.linalg.norm(vel[ret] - params.beam, axis=1)
    hist, _, _ = np.histogram2d(r_ret, vel[ret, 0], bins=edges)
    return {
        "by_n": by_n, "reasons": reasons, "hist": hist.astype(np.int64), "crossings": crossings,
        "violations": int(viol), "collisions": int(tot),
        "max_emit": float(r_emit.max()) if size else 0.0,
        "max_ret": float(r_ret.max()) if r_ret.size else 0.0,
        "outside": int(np.count_nonzero(r_ret > params.R)),
    }


def run_ensemble(N: int, fplus: OutgoingDistribution, params: ProblemParams | None = None,
                 limits: SimLimits | None = None, master_seed: int = 0, threads: int = 1,
                 mode: str = "absorbing", backend=None, chunk: int = SIM_CHUNK,
                 bins: tuple[int, int] = (20, 20)) -> EnsembleStats:
    """Simulate N emitted particles; results depend only on (master_seed, N, config).

    ``mode="transparent"`` lets particles cross the wall plane and counts every
    backward crossing per collision number in ``crossings_by_n``; this is the
    quantity the whole-line series describes.
    """
    if N < 0:
        raise InvalidArgument("N must be >= 0")
    if mode not in MODES:
        raise InvalidArgument(f"mode must be one of {MODES}")
    params = params or fplus.params
    if params != fplus.params:
        # the emitted profile depends on (c, R, M) only; the rate multiplier may differ
        if (params.c, params.R, params.M) != (fplus.params.c, fplus.params.R, fplus.params.M):
            raise InvalidArgument("params and the outgoing distribution disagree on c, R or M")
    limits = limits or SimLimits()
    backend = backend or get_backend()
    edges = _histogram_edges(params, bins)
    stats = EnsembleStats(N, np.zeros(limits.max_collisions + 1, dtype=np.int64),
                          {name: 0 for name in REASONS.values()},
                          np.zeros(bins, dtype=np.int64), edges[0], edges[1], master_seed, mode,
                          np.zeros(limits.max_collisions + 1, dtype=np.int64))
    jobs = []
    start = 0
    for size in chunk_sizes(N, chunk):
        jobs.append((start, size, fplus, params, limits, master_seed, mode, backend, edges))
        start += size
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_chunk, jobs))
    else:
        results = [_run_chunk(job) for job in jobs]
    for res in results:  # fixed chunk order; all sums are integers
        stats.returned_by_n += res["by_n"]
        for k, v in res["reasons"].items():
            stats.non_returned[k] += v
        stats.velocity_histogram += res["hist"]
        stats.crossings_by_n += res["crossings"]
        stats.shrink_violations += res["violations"]
        stats.total_collisions += res["collisions"]
        stats.max_emitted_radius = max(stats.max_emitted_radius, res["max_emit"])
        stats.max_return_radius = max(stats.max_return_radius, res["max_ret"])
        stats.returns_outside_support += res["outside"]
    return stats
