"""Run configuration: JSON file, defaults, validation and content hash.

Schema (every key optional; unknown keys are rejected)::

    {
      "params":  {"c": 1.0, "R": 2.0, "M": 1.0, "rate_multiplier": 1.0},
      "fplus":   {"name": "shellcap"}           # or "gaussbump" with center/width/amplitude
      "beta": 0.25, "n_max": 4, "samples": 1000000, "master_seed": 0,
      "quad":    {"relative_tolerance": 1e-8, "absolute_tolerance": 1e-14},
      "output_dir": "runs",
      "series":   {"xi0": [[-0.5, 0.5, 0.0], ...], "sampler": "rejection",
                   "boundary": "absorbing", "flux_samples": 65536, "flux_replicates": 8,
                   "singularity_direction": [0, 1, 0]},
      "simulate": {"mode": "absorbing", "max_collisions": 64, "max_x": null,
                   "bins": [20, 20], "flux_n": [1, 2, 3]},
      "verify":   {"j_sets": 200, "j_bound_configs": 1000, "simplex_samples": 10000000,
                   "kappa_scale": 1.0, "carleman": true},
      "carleman": {"tolerance": 1e-3, "epsilons": [0.1, 0.01, 0.001]},
      "report":   {"require": ["verify-lemmas", "series", "simulate", "carleman-check"]}
    }

``samples`` is the primary Monte Carlo size of each subcommand: particles for
``simulate``, samples per term for ``series`` and per region for
``verify-lemmas``.
"""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

from .distributions import OUTGOING, make_outgoing
from .errors import ConfigError, InvalidArgument
from .geometry import ProblemParams
from .quadrature import QuadratureSpec

DEFAULTS = {
    "params": {"c": 1.0, "R": 2.0, "M": 1.0, "rate_multiplier": 1.0},
    "fplus": {"name": "shellcap"},
    "beta": 0.25,
    "n_max": 4,
    "samples": 1_000_000,
    "master_seed": 0,
    "quad": {"relative_tolerance": 1e-8, "absolute_tolerance": 1e-14},
    "output_dir": "runs",
    "series": {
        "xi0": [[-0.5, 0.5, 0.0], [-1.0, 0.25, 0.0], [-0.8, 0.3, -0.2], [-4.0, 0.0, 0.0]],
        "sampler": "rejection",
        "boundary": "absorbing",
        "flux_samples": 65536,
        "flux_replicates": 8,
        "singularity_direction": [0.0, 1.0, 0.0],
    },
    "simulate": {"mode": "absorbing", "max_collisions": 64, "max_x": None, "bins": [20, 20],
                 "flux_n": [1, 2, 3]},
    "verify": {"j_sets": 200, "j_bound_configs": 1000, "simplex_samples": 10_000_000,
               "kappa_scale": 1.0, "carleman": True},
    "carleman": {"tolerance": 1e-3, "epsilons": [0.1, 0.01, 0.001]},
    "report": {"require": ["verify-lemmas", "series", "simulate", "carleman-check"]},
}

SUBCOMMANDS = ("verify-lemmas", "series", "simulate", "carleman-check", "report")


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and key != "fplus":
            if not isinstance(val, dict):
                raise ConfigError(f"config key {where!r} must be an object")
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = copy.deepcopy(val)
    return out


class RunConfig:
    """Validated configuration with typed accessors."""

    def __init__(self, data: dict | None = None):
        self.data = _merge(DEFAULTS, data or {})
        self._validate()

    @classmethod
    def load(cls, path: str | Path | None, overrides: dict | None = None) -> "RunConfig":
        data = {}
        if path is not None:
            try:
                data = json.loads(Path(path).read_text())
            except FileNotFoundError as exc:
                raise ConfigError(f"config file not found: {path}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
            if not isinstance(data, dict):
                raise ConfigError("config file must hold a JSON object")
        cfg = _merge(DEFAULTS, data)
        for key, val in (overrides or {}).items():
            if val is not None:
                cfg[key] = val
        return cls(cfg)

    def _validate(self):
        d = self.data
        try:
            self.params = ProblemParams(**{k: float(v) for k, v in d["params"].items()})
            fp = d["fplus"]
            if not isinstance(fp, (dict, str)):
                raise ConfigError("fplus must be a name or an object with a name")
            name = fp if isinstance(fp, str) else fp.get("name")
            if name not in OUTGOING:
                raise ConfigError(f"unknown fplus {name!r}; catalog: {sorted(OUTGOING)}")
            self.quad = QuadratureSpec(**d["quad"])
        except (TypeError, InvalidArgument) as exc:
            raise ConfigError(str(exc)) from exc
        if not 0 < float(d["beta"]) < 1:
            raise ConfigError("beta must lie in (0, 1)")
        for key in ("n_max", "samples"):
            if not isinstance(d[key], int) or d[key] <= 0:
                raise ConfigError(f"{key} must be a positive integer")
        if not isinstance(d["master_seed"], int) or not 0 <= d["master_seed"] < 2 ** 64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")
        for xi in d["series"]["xi0"]:
            if len(xi) != 3 or not xi[0] < 0:
                raise ConfigError(f"series.xi0 entries must be 3-vectors with xi^1 < 0, got {xi}")
        if d["series"]["sampler"] not in ("rejection", "simplex"):
            raise ConfigError("series.sampler must be 'rejection' or 'simplex'")
        if d["series"]["boundary"] not in ("absorbing", "whole_line"):
            raise ConfigError("series.boundary must be 'absorbing' or 'whole_line'")
        if d["simulate"]["mode"] not in ("absorbing", "transparent"):
            raise ConfigError("simulate.mode must be 'absorbing' or 'transparent'")
        bad = set(d["report"]["require"]) - set(SUBCOMMANDS[:-1])
        if bad:
            raise ConfigError(f"report.require has unknown subcommands {sorted(bad)}")

    def fplus(self):
        try:
            return make_outgoing(self.data["fplus"], self.params)
        except (TypeError, InvalidArgument) as exc:
            raise ConfigError(str(exc)) from exc

    def hashed(self) -> dict:
        """Everything that determines results; output_dir and threads are excluded."""
        return {k: v for k, v in self.data.items() if k != "output_dir"}

    def canonical(self) -> str:
        return json.dumps(self.hashed(), sort_keys=True, separators=(",", ":"))

    def content_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def run_id(self, subcommand: str) -> str:
        return f"{subcommand}-{self.content_hash()[:12]}"

    def run_dir(self, subcommand: str) -> Path:
        return Path(self.data["output_dir"]) / self.run_id(subcommand)
