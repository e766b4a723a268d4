"""Verification suites shared by the CLI and the acceptance tests.

Each suite returns ``CheckRecord``s: what was computed, what it was compared
with, the tolerance and the verdict.  ``anchor`` names the statement being
checked in words.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats as sstats

from . import carleman, distributions
from .distributions import OutgoingDistribution
from .geometry import ProblemParams
from .jintegrals import JNormalization, RateParams, j_quadrature, j_recursive, j_upper_bound
from .quadrature import QuadratureSpec
from .regions import (
    RegionParams, choose_D, in_W2_cos, in_W_cos, mc_simplex_difference, mc_weighted_volume,
    vol_simplex_difference_exact, vol_W2_bound, vol_W_weighted_bound,
)
from .series import convolution_check, f_minus_1_quad, flux_integral, remainder_flux_bound
from .simulation import EnsembleStats


@dataclass
class CheckRecord:
    name: str
    anchor: str
    computed: float
    reference: float
    passed: bool
    tolerance: str
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: computed={self.computed:.6g} " \
               f"reference={self.reference:.6g} ({self.tolerance})"


@dataclass
class VerificationReport:
    checks: list
    normalization: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "normalization": self.normalization,
                "checks": [asdict(c) for c in self.checks]}


def _rel(a, b):
    return abs(a - b) / abs(b)


# --- k-integrals -------------------------------------------------------------

def random_rate_sets(count: int, seed: int, max_len: int = 5, lo: float = 0.1, hi: float = 10.0):
    rng = np.random.default_rng([seed, 0x4A])
    out = []
    for _ in range(count):
        l, m = rng.integers(1, max_len + 1, size=2)
        a = np.exp(rng.uniform(math.log(lo), math.log(hi), l))
        b = np.exp(rng.uniform(math.log(lo), math.log(hi), m))
        out.append(RateParams(a, b))
    return out


def j_oracle_suite(norm: JNormalization, count: int = 200, seed: int = 0, tol: float = 1e-6):
    """Recursion against direct quadrature, plus the two closed-form values."""
    worst = 0.0
    for rp in random_rate_sets(count, seed):
        q = j_quadrature(rp)
        worst = max(worst, _rel(j_recursive(rp, norm), q))
    j11 = j_recursive(RateParams([1.0], [1.0]), norm)
    j21 = j_recursive(RateParams([1.0, 1.0], [1.0]), norm)
    return [
        CheckRecord("j_recursion_vs_quadrature", "k-integral recursion", worst, tol, worst < tol,
                    f"max relative error < {tol:g} over {count} rate sets"),
        CheckRecord("j11_unit_rates", "k-integral closed form", j11, math.pi,
                    abs(j11 - math.pi) < 1e-8, "abs < 1e-8"),
        CheckRecord("j21_unit_rates", "k-integral closed form", j21, math.pi / 2,
                    abs(j21 - math.pi / 2) < 1e-8, "abs < 1e-8"),
    ]


def j_bound_configs(count: int, seed: int, max_len: int = 5):
    """Random (rates, A, B, k) with every a_i > A and k of the b_j below B."""
    rng = np.random.default_rng([seed, 0x4B])
    for _ in range(count):
        l, m = (int(v) for v in rng.integers(1, max_len + 1, size=2))
        k = int(rng.integers(1, m + 1))
        A = 10 ** rng.uniform(-2, 2)
        B = 10 ** rng.uniform(-2, 2)
        a = A * (1.0 + 10 ** rng.uniform(-3, 2, l))
        small = B * rng.uniform(0.01, 1.0, k)
        rest = 10 ** rng.uniform(-3, 3, m - k)
        b = np.concatenate([small, rest])
        rng.shuffle(b)
        yield RateParams(a, b), A, B, k


def j_bound_suite(norm: JNormalization, count: int = 1000, seed: int = 0):
    violations = 0
    worst = 0.0
    for rates, A, B, k in j_bound_configs(count, seed):
        J = j_recursive(rates, norm)
        bound = j_upper_bound(A, B, k, rates.l, rates.m, norm)
        violations += J > bound
        worst = max(worst, J / bound)
    return [CheckRecord("j_upper_bound_dominance", "k-integral upper bound", float(violations), 0.0,
                        violations == 0, f"zero violations over {count} configurations",
                        {"max_ratio": float(worst)})]


def convolution_suite(norm: JNormalization, pairs=((1.0, 1.0), (0.3, 5.0), (7.0, 0.2))):
    out = []
    for a, b in pairs:
        r = convolution_check(a, b, norm)
        out.append(CheckRecord(f"convolution_identity_a{a:g}_b{b:g}", "exponential convolution form",
                               r["convolution"], r["j11"], r["relative_difference"] < 1e-9,
                               "relative < 1e-9"))
    return out


# --- angle-region volumes -------------------------------------------------------

def volume_W_suite(samples: int = 1_000_000, seed: int = 0, ns=range(1, 7), r0_ratios=(0.1, 0.25, 0.45),
                   R_ratios=(2.0, math.e, 10.0), c: float = 1.0):
    rows = []
    checks = []
    for R in (c * x for x in R_ratios):
        for r0 in (c * x for x in r0_ratios):
            for n in ns:
                rp = RegionParams(r0, c, R, n)
                est, err = mc_weighted_volume(lambda x: in_W_cos(x, rp), n, rp, samples,
                                              seed=seed + 7919 * n, space="cos")
                bound = vol_W_weighted_bound(rp)
                ok = est - 3 * err <= bound
                rows.append({"n": n, "region": "W", "r0": r0, "R": R, "mc_estimate": est,
                             "stderr": err, "bound": bound, "pass": ok})
                if n == 1:
                    exact = r0 / c - r0 / R
                    okx = abs(est - exact) <= 3 * err
                    checks.append(CheckRecord(f"W_exact_n1_r0{r0:g}_R{R:.4g}", "angle-region volume (n=1)",
                                              est, exact, okx, "within 3 sigma", {"stderr": err}))
    fails = sum(not r["pass"] for r in rows)
    checks.insert(0, CheckRecord("W_volume_bound", "angle-region volume bound", float(fails), 0.0, fails == 0,
                                 f"MC - 3 sigma <= bound on {len(rows)} cases"))
    return checks, rows


def volume_W2_suite(samples: int = 1_000_000, seed: int = 0, ns=(2, 3, 4), beta: float = 0.25,
                    r0_factors=(0.25, 0.05), R_ratios=(2.0, math.e, 10.0), c: float = 1.0):
    D = choose_D(beta)
    rows = []
    for R in (c * x for x in R_ratios):
        for f in r0_factors:
            r0 = f * c / D
            for n in ns:
                rp = RegionParams(r0, c, R, n, beta, D)
                est, err = mc_weighted_volume(lambda x: in_W2_cos(x, rp), n, rp, samples,
                                              seed=seed + 104729 * n, space="cos")
                bound = vol_W2_bound(rp)
                rows.append({"n": n, "region": "W2", "r0": r0, "R": R, "mc_estimate": est,
                             "stderr": err, "bound": bound, "pass": est - 3 * err <= bound})
    fails = sum(not r["pass"] for r in rows)
    return [CheckRecord("W2_volume_bound", "split-region volume bound", float(fails), 0.0, fails == 0,
                        f"MC - 3 sigma <= bound on {len(rows)} cases")], rows


def simplex_suite(samples: int = 10_000_000, seed: int = 0, n: int = 3):
    rp = RegionParams(0.25, 1.0, math.e, n)
    exact = vol_simplex_difference_exact(rp)
    est, err = mc_simplex_difference(rp, samples, seed)
    return [CheckRecord("simplex_difference_volume", "log-coordinate volume", est, exact,
                        abs(est - exact) <= 3 * err, "within 3 sigma", {"stderr": err})]


# --- gain term --------------------------------------------------------------------

GAUSS_PAIRS = (
    ("gauss((1,0,0),0.7)", "gauss((0,1,0),0.9)", (0.5, 0.4, 0.2)),
    ("gauss((0,0,0),1.0)", "gauss((0.5,-0.5,0.3),0.6)", (-0.3, 0.8, 0.1)),
    ("gauss((0.2,0.3,-0.4),0.5)", "gauss((-1,0,0.5),0.8)", (0.0, 0.0, 0.0)),
)


def carleman_suite(quad: QuadratureSpec | None = None, thetas=(0.5, 1.0, 2.0), epsilons=(1e-1, 1e-2, 1e-3),
                   tol: float = 1e-3, mollifier_tol: float = 1e-2, pairs=GAUSS_PAIRS):
    quad = quad or QuadratureSpec(relative_tolerance=1e-7, absolute_tolerance=1e-14)
    checks = []
    for i, (fs, gs, xi) in enumerate(pairs):
        f, g = distributions.from_spec(fs), distributions.from_spec(gs)
        d = carleman.gain_direct(f, g, xi, quad)
        cf = carleman.gain_carleman(f, g, xi, quad)
        cs = carleman.gain_carleman(g, f, xi, quad)
        checks.append(CheckRecord(f"gain_direct_vs_plane_pair{i}", "plane representation of the gain term",
                                  cf, d, _rel(cf, d) < tol, f"relative < {tol:g}"))
        checks.append(CheckRecord(f"gain_symmetry_pair{i}", "gain term symmetry", cs, cf,
                                  _rel(cs, cf) < tol, f"relative < {tol:g}"))
    xi = np.array([1.0, 0.5, 0.0])
    for th in thetas:
        M = distributions.maxwellian(th)
        q = carleman.gain_carleman(M, M, xi, quad)
        ref = math.pi * float(M(xi)) * carleman.maxwellian_loss_integral(th, xi)
        checks.append(CheckRecord(f"maxwellian_gain_theta{th:g}", "Maxwellian gain identity", q, ref,
                                  _rel(q, ref) < tol, f"relative < {tol:g}"))
    fs, gs, xi = pairs[0]
    f, g = distributions.from_spec(fs), distributions.from_spec(gs)
    target = carleman.gain_carleman(f, g, xi, quad)
    mq = QuadratureSpec(relative_tolerance=1e-4, absolute_tolerance=1e-12)
    errors = []
    for eps in epsilons:
        first, second = carleman.mollifier_terms(f, g, xi, eps, mq)
        errors.append(float((first - second - target) / target))
    checks.append(CheckRecord("mollified_gain_convergence", "mollified pair-integral limit",
                              abs(errors[-1]), mollifier_tol,
                              abs(errors[-1]) < mollifier_tol and abs(errors[-1]) < abs(errors[0]),
                              f"final relative error < {mollifier_tol:g} and decreasing",
                              {"epsilons": list(epsilons), "relative_errors": errors}))
    return checks


# --- series against the simulator --------------------------------------------------

def flux_cross_check(stats: EnsembleStats, fplus: OutgoingDistribution, ns=(1, 2, 3), samples: int = 1 << 16,
                     replicates: int = 8, seed: int = 0, max_rel: float = 0.05, sigmas: float = 3.0):
    """Simulated return fractions against the series flux integrals."""
    boundary = "whole_line" if stats.mode == "transparent" else "absorbing"
    checks, rows = [], []
    for n in ns:
        est = flux_integral(n, fplus, samples, replicates, seed, boundary)
        series_frac = est.value / fplus.total_flux
        series_err = est.stderr / fplus.total_flux
        sim, sim_err = stats.fraction(n), stats.fraction_stderr(n)
        comb = math.hypot(series_err, sim_err)
        rel = abs(sim - series_frac) / series_frac
        ok = abs(sim - series_frac) <= sigmas * comb and rel <= max_rel
        rows.append({"n": n, "series_fraction": series_frac, "series_stderr": series_err,
                     "sim_fraction": sim, "sim_stderr": sim_err, "z": (sim - series_frac) / comb,
                     "relative_deviation": rel, "pass": ok})
        checks.append(CheckRecord(f"flux_cross_oracle_n{n}", "collision-count decomposition of the flux",
                                  sim, series_frac, ok,
                                  f"|diff| <= {sigmas:g} combined sigma and relative <= {max_rel:g}",
                                  rows[-1]))
    return checks, rows


def _merged_table(x: np.ndarray, y: np.ndarray, min_expected: float = 5.0) -> np.ndarray:
    """2 x K contingency table with sparse columns merged into their neighbours."""
    cols = []
    acc = np.zeros(2)
    for a, b in zip(x, y):
        acc = acc + (a, b)
        if acc.sum() >= 2 * min_expected and acc.min() > 0:
            cols.append(acc)
            acc = np.zeros(2)
    if acc.sum() > 0:
        if cols:
            cols[-1] = cols[-1] + acc
        else:
            cols.append(acc)
    return np.array(cols).T


def two_sample_chi2(x, y) -> tuple[float, float]:
    """Chi-square statistic and p-value of a two-sample homogeneity test on counts."""
    table = _merged_table(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    if table.shape[1] < 2:
        return 0.0, 1.0
    chi2, p, _, _ = sstats.chi2_contingency(table, correction=False)
    return float(chi2), float(p)


def scaling_suite(a: EnsembleStats, b: EnsembleStats, alpha: float = 0.01):
    chi_n, p_n = two_sample_chi2(a.returned_by_n, b.returned_by_n)
    chi_r, p_r = two_sample_chi2(a.r0_histogram(), b.r0_histogram())
    return [
        CheckRecord("rate_invariance_collision_counts", "rate-constant invariance at the wall", p_n, alpha,
                    p_n > alpha, f"chi-square p > {alpha:g}", {"chi2": chi_n}),
        CheckRecord("rate_invariance_r0_histogram", "rate-constant invariance at the wall", p_r, alpha,
                    p_r > alpha, f"chi-square p > {alpha:g}", {"chi2": chi_r}),
    ]


def support_suite(stats: EnsembleStats):
    return [
        CheckRecord("returns_inside_support", "support of the returning distribution",
                    float(stats.returns_outside_support), 0.0, stats.returns_outside_support == 0,
                    "zero returns with r0 > R", {"max_return_radius": stats.max_return_radius}),
        CheckRecord("collision_shrinkage", "shrinking property", float(stats.shrink_violations), 0.0,
                    stats.shrink_violations == 0, "zero violations beyond 1e-12 relative",
                    {"collisions": stats.total_collisions}),
        CheckRecord("conservation", "particle bookkeeping", float(stats.returned + stats.non_returned_total),
                    float(stats.emitted), stats.check_conservation(), "exact"),
    ]


def tail_suite(stats: EnsembleStats, fplus: OutgoingDistribution, norm: JNormalization,
               ratio_limit: float = 0.5, min_count: int = 100):
    """Per-n flux below the remainder bound, and the ratio of successive counts beyond log(R/c) + 3."""
    params = fplus.params
    counts = stats.returned_by_n
    above = []
    for n in range(1, len(counts)):
        if counts[n] == 0:
            continue
        flux = counts[n] / stats.emitted * fplus.total_flux
        bound = remainder_flux_bound(n, params, norm).value
        if flux > bound:
            above.append(n)
    start = int(math.floor(math.log(params.R / params.c) + 3.0)) + 1
    ratios = {}
    for n in range(start, len(counts) - 1):
        if counts[n] < min_count or counts[n + 1] < min_count // 10:
            break
        ratios[n] = float(counts[n + 1] / counts[n])
    worst = max(ratios.values()) if ratios else float("nan")
    return [
        CheckRecord("per_n_flux_below_remainder_bound", "flux remainder bound", float(len(above)), 0.0,
                    not above, "every observed n", {"violating_n": above}),
        CheckRecord("super_geometric_tail", "factorial convergence of the series", worst, ratio_limit,
                    bool(ratios) and worst < ratio_limit, f"count[n+1]/count[n] < {ratio_limit:g} for n >= {start}",
                    {"ratios": ratios}),
    ]


def singularity_suite(fplus: OutgoingDistribution, direction=(0.0, 1.0, 0.0), js=range(1, 7),
                      tol: float = 0.1):
    """Slope of log(f_1 |xi0^1|) against log r0 along a fixed direction."""
    params = fplus.params
    w = np.asarray(direction, dtype=float)
    w = w / np.linalg.norm(w)
    r0 = np.array([params.c * 2.0 ** -j for j in js])
    vals = []
    for r in r0:
        xi0 = params.beam + r * w
        vals.append(f_minus_1_quad(xi0, fplus) * abs(xi0[0]))
    slope = float(np.polyfit(np.log(r0), np.log(vals), 1)[0])
    return [CheckRecord("singularity_exponent", "one-collision singularity at the beam velocity", slope, -1.0,
                        abs(slope + 1.0) <= tol, f"slope within {tol:g} of -1",
                        {"r0": r0.tolist(), "f1_times_abs_xi1": vals})], list(zip(r0.tolist(), vals))


def shellcap_problem(c: float = 1.0, R: float = 2.0) -> OutgoingDistribution:
    return distributions.shellcap(ProblemParams(c, R))
