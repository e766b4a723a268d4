"""Command line entry point: ``coldwall <subcommand> [flags]``.

Every run writes into ``<output_dir>/<subcommand>-<config hash>/`` and
never touches other run directories.  Outputs depend only on the effective
configuration (file values overridden by flags); ``--threads`` changes speed,
never bytes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import SUBCOMMANDS, RunConfig
from .errors import ColdwallError, ConfigError, MissingInputs
from .jintegrals import JNormalization
from .series import (
    f_minus_1_quad, flux_integral, i1_sum_bound, i2_sum_bound, normalization_report,
    pointwise_bound_outer, region_params, remainder_flux_bound, term_with_split,
)
from .simulation import SimLimits, run_ensemble
from . import verify

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

CSV_HELP = """\
output files (numbers in CSV use 17 significant digits):
  verify-lemmas  report.json, checks.csv, volumes.csv
      checks.csv   name,anchor,computed,reference,passed,tolerance
      volumes.csv  region,n,r0,R,mc_estimate,stderr,bound,passed
  series         series_<i>.csv per return velocity, summary.json, singularity.csv, flux.csv
      series_<i>.csv   n,f_n,stderr,I1,I2,outer_bound
      singularity.csv  r0,log_r0,f1_abs_xi1,log_f1_abs_xi1
      flux.csv         n,flux,stderr,remainder_bound
  simulate       returns.csv, velocity_histogram.csv, flux_comparison.csv, report.json
      returns.csv             n,returned,fraction,stderr,crossings
      velocity_histogram.csv  r0_lo,r0_hi,xi1_lo,xi1_hi,count
      flux_comparison.csv     n,series_fraction,series_stderr,sim_fraction,sim_stderr,z,relative_deviation,passed
  carleman-check report.json, carleman.csv
      carleman.csv  name,computed,reference,passed,tolerance
  report         report.json, report.md (merges the runs above for the same config)
every run directory also holds manifest.json with the config and its sha256.

exit status: 0 all checks pass, 1 a check failed, 2 usage, config or missing inputs.
"""


# --- serialization ------------------------------------------------------------

def _plain(obj):
    """JSON-safe copy with numpy scalars and arrays converted."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return "" if v is None else str(v)


class RunWriter:
    """Writes the files of one run and records their digests for the manifest."""

    def __init__(self, cfg: RunConfig, subcommand: str):
        self.cfg = cfg
        self.subcommand = subcommand
        self.dir = cfg.run_dir(subcommand)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.digests = {}

    def _put(self, name: str, text: str):
        data = text.encode()
        (self.dir / name).write_bytes(data)
        self.digests[name] = hashlib.sha256(data).hexdigest()

    def json(self, name: str, obj):
        self._put(name, json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n")

    def csv(self, name: str, header, rows):
        lines = [",".join(header)]
        lines += [",".join(_cell(r[h] if isinstance(r, dict) else r[i]) for i, h in enumerate(header))
                  for r in rows]
        self._put(name, "\n".join(lines) + "\n")

    def text(self, name: str, text: str):
        self._put(name, text)

    def manifest(self, passed: bool, extra: dict | None = None):
        body = {
            "run_id": self.cfg.run_id(self.subcommand),
            "subcommand": self.subcommand,
            "config_sha256": self.cfg.content_hash(),
            "config": self.cfg.hashed(),
            "version": __version__,
            "passed": passed,
            "outputs": dict(sorted(self.digests.items())),
        }
        body.update(extra or {})
        (self.dir / "manifest.json").write_text(json.dumps(_plain(body), indent=2, sort_keys=True) + "\n")


def _check_rows(checks):
    return [{"name": c.name, "anchor": c.anchor, "computed": c.computed, "reference": c.reference,
             "passed": c.passed, "tolerance": c.tolerance} for c in checks]


CHECK_HEADER = ("name", "anchor", "computed", "reference", "passed", "tolerance")


def _say(msg: str):
    print(msg, flush=True)


# --- subcommands ----------------------------------------------------------------

def run_verify_lemmas(cfg: RunConfig, threads: int = 1) -> int:
    d = cfg.data
    v = d["verify"]
    seed = d["master_seed"]
    measured = JNormalization.measure(cfg.quad)
    norm = JNormalization(measured.kappa * float(v["kappa_scale"]))
    checks = []
    checks += verify.j_oracle_suite(norm, count=v["j_sets"], seed=seed)
    checks += verify.j_bound_suite(norm, count=v["j_bound_configs"], seed=seed)
    checks += verify.convolution_suite(norm)
    w_checks, w_rows = verify.volume_W_suite(d["samples"], seed)
    w2_checks, w2_rows = verify.volume_W2_suite(d["samples"], seed, beta=float(d["beta"]))
    checks += w_checks + w2_checks + verify.simplex_suite(v["simplex_samples"], seed)
    if v["carleman"]:
        checks += verify.carleman_suite(thetas=(0.5, 1.0, 2.0), epsilons=tuple(d["carleman"]["epsilons"]),
                                        tol=float(d["carleman"]["tolerance"]))
    report = verify.VerificationReport(checks, normalization_report(norm))
    out = RunWriter(cfg, "verify-lemmas")
    out.json("report.json", report.to_dict())
    out.csv("checks.csv", CHECK_HEADER, _check_rows(checks))
    out.csv("volumes.csv", ("region", "n", "r0", "R", "mc_estimate", "stderr", "bound", "passed"),
            [{**r, "passed": r["pass"]} for r in w_rows + w2_rows])
    out.manifest(report.passed)
    for c in checks:
        _say(c.line())
    return EXIT_PASS if report.passed else EXIT_FAIL


def _series_one(cfg: RunConfig, xi0, fplus, norm):
    d = cfg.data
    s = d["series"]
    params = fplus.params
    beta = float(d["beta"])
    xi0 = np.asarray(xi0, dtype=float)
    r0 = float(np.linalg.norm(xi0 - params.beam))
    rows = []
    for n in range(1, d["n_max"] + 1):
        I1, I2, tot = term_with_split(xi0, n, fplus, d["samples"], d["master_seed"], beta,
                                      sampler=s["sampler"], boundary=s["boundary"], norm=norm)
        outer = pointwise_bound_outer(xi0, n, params, norm) if r0 > params.c / 2 else None
        rows.append({"n": n, "f_n": tot.value, "stderr": tot.stderr, "I1": I1.value, "I2": I2.value,
                     "outer_bound": outer})
    partial = sum(r["f_n"] for r in rows)
    partial_err = math.sqrt(sum(r["stderr"] ** 2 for r in rows))
    flags = {}
    if r0 > params.c / 2:
        flags["terms_below_outer_bound"] = all(r["f_n"] - 3 * r["stderr"] <= r["outer_bound"] for r in rows)
    else:
        rp = region_params(xi0, params, 1, beta)
        bound = i1_sum_bound(xi0, params, norm) + i2_sum_bound(xi0, rp, params, norm)
        flags["partial_sum_below_inner_bound"] = partial - 3 * partial_err <= bound
        flags["inner_bound"] = bound
    if r0 > params.R:
        flags["zero_outside_support"] = all(r["f_n"] == 0.0 for r in rows)
    f1q = f_minus_1_quad(xi0, fplus, cfg.quad, norm)
    summary = {"xi0": xi0.tolist(), "r0": r0, "partial_sum": partial, "partial_sum_stderr": partial_err,
               "f1_quadrature": f1q, "f1_mc": rows[0]["f_n"], "f1_mc_stderr": rows[0]["stderr"],
               "remainder_flux_bound": remainder_flux_bound(d["n_max"] + 1, params, norm, beta).value,
               "bound_flags": flags}
    return rows, summary


def run_series(cfg: RunConfig, threads: int = 1) -> int:
    d = cfg.data
    s = d["series"]
    fplus = cfg.fplus()
    norm = JNormalization.measure(cfg.quad)
    out = RunWriter(cfg, "series")
    summaries = []
    passed = True
    for i, xi0 in enumerate(s["xi0"]):
        rows, summary = _series_one(cfg, xi0, fplus, norm)
        out.csv(f"series_{i}.csv", ("n", "f_n", "stderr", "I1", "I2", "outer_bound"), rows)
        summaries.append(summary)
        ok = all(v for k, v in summary["bound_flags"].items() if isinstance(v, bool))
        passed &= ok
        _say(f"[{'PASS' if ok else 'FAIL'}] xi0={summary['xi0']} r0={summary['r0']:.6g} "
             f"partial_sum={summary['partial_sum']:.6g}")
    sing, pairs = verify.singularity_suite(fplus, tuple(s["singularity_direction"]))
    out.csv("singularity.csv", ("r0", "log_r0", "f1_abs_xi1", "log_f1_abs_xi1"),
            [(r, math.log(r), f, math.log(f)) for r, f in pairs])
    flux_rows = []
    for n in range(1, d["n_max"] + 1):
        est = flux_integral(n, fplus, s["flux_samples"], s["flux_replicates"], d["master_seed"], s["boundary"],
                            norm)
        flux_rows.append({"n": n, "flux": est.value, "stderr": est.stderr,
                          "remainder_bound": remainder_flux_bound(n, fplus.params, norm).value})
    out.csv("flux.csv", ("n", "flux", "stderr", "remainder_bound"), flux_rows)
    passed &= sing[0].passed
    _say(sing[0].line())
    out.json("summary.json", {"passed": passed, "fplus": fplus.describe(), "total_flux": fplus.total_flux,
                              "normalization": normalization_report(norm), "points": summaries,
                              "singularity": _check_rows(sing)[0], "flux": flux_rows})
    out.manifest(passed)
    return EXIT_PASS if passed else EXIT_FAIL


def run_simulate(cfg: RunConfig, threads: int = 1) -> int:
    d = cfg.data
    sim = d["simulate"]
    fplus = cfg.fplus()
    limits = SimLimits(max_collisions=sim["max_collisions"], max_x=sim["max_x"])
    stats = run_ensemble(d["samples"], fplus, cfg.params, limits, d["master_seed"], threads, sim["mode"],
                         bins=tuple(sim["bins"]))
    norm = JNormalization.measure(cfg.quad)
    flux_checks, flux_rows = verify.flux_cross_check(stats, fplus, tuple(sim["flux_n"]),
                                                     d["series"]["flux_samples"],
                                                     d["series"]["flux_replicates"], d["master_seed"])
    checks = flux_checks + verify.support_suite(stats) + verify.tail_suite(stats, fplus, norm)
    passed = all(c.passed for c in checks)
    out = RunWriter(cfg, "simulate")
    counts = stats.returned_by_n
    out.csv("returns.csv", ("n", "returned", "fraction", "stderr", "crossings"),
            [{"n": n, "returned": int(counts[n]), "fraction": counts[n] / stats.emitted,
              "stderr": math.sqrt(counts[n] / stats.emitted * (1 - counts[n] / stats.emitted) / stats.emitted),
              "crossings": int(stats.crossings_by_n[n])} for n in range(len(counts))])
    h = stats.velocity_histogram
    out.csv("velocity_histogram.csv", ("r0_lo", "r0_hi", "xi1_lo", "xi1_hi", "count"),
            [(stats.r0_edges[i], stats.r0_edges[i + 1], stats.xi1_edges[j], stats.xi1_edges[j + 1], int(h[i, j]))
             for i in range(h.shape[0]) for j in range(h.shape[1])])
    out.csv("flux_comparison.csv", ("n", "series_fraction", "series_stderr", "sim_fraction", "sim_stderr", "z",
                                    "relative_deviation", "passed"),
            [{**r, "passed": r["pass"]} for r in flux_rows])
    out.json("report.json", verify.VerificationReport(checks, normalization_report(norm)).to_dict())
    out.manifest(passed, {"emitted": stats.emitted, "returned": stats.returned,
                          "non_returned": stats.non_returned, "total_flux": fplus.total_flux,
                          "total_collisions": stats.total_collisions})
    for c in checks:
        _say(c.line())
    return EXIT_PASS if passed else EXIT_FAIL


def run_carleman_check(cfg: RunConfig, threads: int = 1) -> int:
    cm = cfg.data["carleman"]
    checks = verify.carleman_suite(epsilons=tuple(cm["epsilons"]), tol=float(cm["tolerance"]))
    report = verify.VerificationReport(checks, {})
    out = RunWriter(cfg, "carleman-check")
    out.json("report.json", report.to_dict())
    out.csv("carleman.csv", ("name", "computed", "reference", "passed", "tolerance"), _check_rows(checks))
    out.manifest(report.passed)
    for c in checks:
        _say(c.line())
    return EXIT_PASS if report.passed else EXIT_FAIL


REPORT_INPUTS = {
    "verify-lemmas": ("manifest.json", "report.json"),
    "series": ("manifest.json", "summary.json"),
    "simulate": ("manifest.json", "report.json", "flux_comparison.csv"),
    "carleman-check": ("manifest.json", "report.json"),
}


def _read_csv(path: Path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


def run_report(cfg: RunConfig, threads: int = 1) -> int:
    required = cfg.data["report"]["require"]
    paths = {sub: [cfg.run_dir(sub) / name for name in REPORT_INPUTS[sub]] for sub in required}
    missing = [p for ps in paths.values() for p in ps if not p.is_file()]
    if missing:
        raise MissingInputs(missing)
    merged = {}
    for sub in required:
        manifest = json.loads(paths[sub][0].read_text())
        merged[sub] = {"run_id": manifest["run_id"], "passed": manifest["passed"],
                       "outputs": manifest["outputs"]}
        if sub == "simulate":
            merged[sub]["flux_comparison"] = _read_csv(paths[sub][2])
            merged[sub]["non_returned"] = manifest["non_returned"]
        else:
            body = json.loads(paths[sub][1].read_text())
            if "checks" in body:
                merged[sub]["checks"] = [{k: c[k] for k in ("name", "passed", "computed", "reference")}
                                         for c in body["checks"]]
            if "normalization" in body and body["normalization"]:
                merged[sub]["normalization"] = body["normalization"]
    passed = all(m["passed"] for m in merged.values())
    lines = ["# coldwall report", "", f"config sha256: `{cfg.content_hash()}`", "",
             "| run | status |", "|---|---|"]
    lines += [f"| {m['run_id']} | {'pass' if m['passed'] else 'FAIL'} |" for m in merged.values()]
    if "simulate" in merged:
        lines += ["", "## Simulated return fractions against series flux", "",
                  "| n | series | simulated | z | relative deviation |", "|---|---|---|---|---|"]
        lines += [f"| {r['n']} | {float(r['series_fraction']):.6g} | {float(r['sim_fraction']):.6g} | "
                  f"{float(r['z']):.3g} | {float(r['relative_deviation']):.3g} |"
                  for r in merged["simulate"]["flux_comparison"]]
    out = RunWriter(cfg, "report")
    out.json("report.json", {"passed": passed, "config_sha256": cfg.content_hash(), "runs": merged})
    out.text("report.md", "\n".join(lines) + "\n")
    out.manifest(passed)
    _say(f"[{'PASS' if passed else 'FAIL'}] report over {', '.join(required)}")
    return EXIT_PASS if passed else EXIT_FAIL


RUNNERS = {
    "verify-lemmas": run_verify_lemmas,
    "series": run_series,
    "simulate": run_simulate,
    "carleman-check": run_carleman_check,
    "report": run_report,
}


# --- argument handling --------------------------------------------------------------

def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coldwall", description="Returning distribution at a wall hit "
                                     "by a cold beam: verification suites, series and simulation.",
                                     epilog=CSV_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", metavar="PATH", help="JSON config; flags override its values")
    parser.add_argument("--seed", type=_u64, metavar="U64", help="master seed")
    parser.add_argument("--samples", type=_positive_int, metavar="N", help="primary Monte Carlo size")
    parser.add_argument("--threads", type=_positive_int, metavar="N",
                        help="worker threads (speed only); default $COLDWALL_THREADS or 1")
    parser.add_argument("--output", metavar="DIR", help="root directory for run outputs")
    return parser


def _threads(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("COLDWALL_THREADS")
    if env is None:
        return 1
    try:
        v = int(env)
    except ValueError as exc:
        raise ConfigError(f"COLDWALL_THREADS must be a positive integer, got {env!r}") from exc
    if v <= 0:
        raise ConfigError(f"COLDWALL_THREADS must be a positive integer, got {env!r}")
    return v


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code == 0 else EXIT_USAGE
    try:
        threads = _threads(args.threads)
        cfg = RunConfig.load(args.config, {"master_seed": args.seed, "samples": args.samples,
                                           "output_dir": args.output})
        return RUNNERS[args.subcommand](cfg, threads)
    except (ConfigError, MissingInputs) as exc:
        print(f"coldwall: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ColdwallError as exc:
        print(f"coldwall: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
