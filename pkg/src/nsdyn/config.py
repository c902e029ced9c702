"""Run configuration: TOML parsing, validation and hashing.

A configuration has the sections ``space``, ``potential``, ``measure``,
``system`` and ``run``.  Only ``space`` is required.  Validation errors name
the offending key as ``section.key``.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import dataclass
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bernoulli import BernoulliSpec, HypothesisViolation, equilibrium_from_potential
from .expansive import IntervalNDS, ShiftNDS
from .potentials import POLICIES, PotentialSeq
from .seqspace import AlphabetSeq

RUN_DEFAULTS = {
    "N_hi": 200,
    "N_lo": None,
    "depth_max": 12,
    "N": 6,
    "tol": 1e-3,
    "policy": "midpoint",
    "seed": 0,
    "samples": 200,
    "horizon": 1000,
    "gibbs_n": 1000,
    "eps_ladder": [1, 2, 3],
    "ladder_n": 8,
    "critical": True,
    "sbv_n_max": 16,
}

SYSTEM_DEFAULTS = {
    "kind": "interval_expanding",
    "metric": "circle",
    "delta": 0.25,
    "eps": 0.05,
    "J": 20,
    "guard": 30,
    "points": 200,
    "grid": 256,
    "pairs": 1000,
    "orbit_n": 8,
    "orbit_eps": 0.2,
}


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"config error at '{key}': {message}")
        self.key = key


@dataclass
class RunConfig:
    raw: dict
    m: AlphabetSeq
    f: PotentialSeq
    run: dict
    system: dict
    measure_raw: dict | None

    def measure(self) -> BernoulliSpec:
        """The configured Bernoulli measure (may raise ``HypothesisViolation``)."""
        mr = self.measure_raw
        if mr is None:
            raise ConfigError("measure", "section is required for this command")
        if mr.get("equilibrium", False):
            return equilibrium_from_potential(self.m, self.f, self.run["policy"])
        try:
            mu = BernoulliSpec(mr.get("head", []), mr["period"])
        except HypothesisViolation:
            raise
        except KeyError:
            raise ConfigError("measure.period", "missing (or set equilibrium = true)") from None
        except ValueError as exc:
            raise ConfigError("measure.period", str(exc)) from None
        if mu.m != self.m:
            raise ConfigError("measure.period", f"vector lengths {mu.m} do not match space {self.m}")
        return mu

    def dynamical_system(self):
        kind = self.system["kind"]
        if kind == "shift":
            return ShiftNDS(self.m)
        return IntervalNDS(self.m, self.system["metric"])

    @property
    def sha256(self) -> str:
        return config_hash(self.raw)


def config_hash(raw: dict) -> str:
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def _int_list(val, key) -> list[int]:
    if not isinstance(val, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in val):
        raise ConfigError(key, "expected a list of integers")
    return val


def _parse_space(sec: dict) -> AlphabetSeq:
    head = _int_list(sec.get("head", []), "space.head")
    if "period" not in sec:
        raise ConfigError("space.period", "missing")
    period = _int_list(sec["period"], "space.period")
    try:
        return AlphabetSeq(tuple(head), tuple(period))
    except ValueError as exc:
        raise ConfigError("space.period", str(exc)) from None


def _tables(val, key, form):
    if not isinstance(val, list):
        raise ConfigError(key, "expected a list of tables")
    out = []
    for t in val:
        try:
            arr = np.asarray(t, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError(key, "tables must be rectangular numeric arrays") from None
        if form == "exp":
            if np.any(arr <= 0):
                raise ConfigError(key, "exp-form weights must be positive")
            arr = np.log(arr)
        out.append(arr)
    return out


def _parse_potential(sec: dict | None, m: AlphabetSeq) -> PotentialSeq:
    if sec is None:
        return PotentialSeq.constant(m, 0.0)
    kind = sec.get("kind", "first_coord")
    form = sec.get("form", "value")
    if form not in ("value", "exp"):
        raise ConfigError("potential.form", "must be 'value' or 'exp'")
    if kind == "constant":
        val = sec.get("value", 0.0)
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise ConfigError("potential.value", "expected a number")
        return PotentialSeq.constant(m, math.log(val) if form == "exp" else float(val))
    if kind not in ("first_coord", "depth"):
        raise ConfigError("potential.kind", f"unknown kind {kind!r}")
    depth = sec.get("depth", 1)
    if not isinstance(depth, int) or depth < 1:
        raise ConfigError("potential.depth", "expected a positive integer")
    if kind == "first_coord" and depth != 1:
        raise ConfigError("potential.depth", "first_coord potentials have depth 1")
    if "period" not in sec:
        raise ConfigError("potential.period", "missing")
    head = _tables(sec.get("head", []), "potential.head", form)
    period = _tables(sec["period"], "potential.period", form)
    try:
        return PotentialSeq(m, depth, head, period)
    except ValueError as exc:
        raise ConfigError("potential.period", str(exc)) from None


def _merge(defaults: dict, sec: dict | None, section: str) -> dict:
    out = dict(defaults)
    for k, v in (sec or {}).items():
        if k not in defaults:
            raise ConfigError(f"{section}.{k}", "unknown key")
        out[k] = v
    return out


def _check_run(run: dict):
    for key in ("N_hi", "depth_max", "N", "samples", "horizon", "gibbs_n", "ladder_n", "sbv_n_max"):
        v = run[key]
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ConfigError(f"run.{key}", "expected a positive integer")
    if run["N_lo"] is not None and not (isinstance(run["N_lo"], int) and 1 <= run["N_lo"] <= run["N_hi"]):
        raise ConfigError("run.N_lo", "expected an integer in [1, N_hi]")
    if not isinstance(run["seed"], int) or not 0 <= run["seed"] < 2**64:
        raise ConfigError("run.seed", "expected an unsigned 64-bit integer")
    if run["policy"] not in POLICIES:
        raise ConfigError("run.policy", f"expected one of {POLICIES}")
    if not isinstance(run["tol"], (int, float)) or run["tol"] <= 0:
        raise ConfigError("run.tol", "expected a positive number")
    _int_list(run["eps_ladder"], "run.eps_ladder")


def _check_system(sysd: dict):
    if sysd["kind"] not in ("interval_expanding", "shift"):
        raise ConfigError("system.kind", "expected 'interval_expanding' or 'shift'")
    if sysd["metric"] not in ("circle", "interval"):
        raise ConfigError("system.metric", "expected 'circle' or 'interval'")
    for key in ("delta", "eps", "orbit_eps"):
        if not isinstance(sysd[key], (int, float)) or sysd[key] <= 0:
            raise ConfigError(f"system.{key}", "expected a positive number")
    for key in ("J", "guard", "points", "grid", "pairs", "orbit_n"):
        if not isinstance(sysd[key], int) or sysd[key] < 1:
            raise ConfigError(f"system.{key}", "expected a positive integer")


def parse_config(raw: dict) -> RunConfig:
    """Validate a decoded TOML document."""
    known = {"space", "potential", "measure", "system", "run"}
    for k in raw:
        if k not in known:
            raise ConfigError(k, "unknown section")
    if "space" not in raw:
        raise ConfigError("space", "section is required")
    m = _parse_space(raw["space"])
    f = _parse_potential(raw.get("potential"), m)
    run = _merge(RUN_DEFAULTS, raw.get("run"), "run")
    _check_run(run)
    system = _merge(SYSTEM_DEFAULTS, raw.get("system"), "system")
    _check_system(system)
    measure = raw.get("measure")
    if measure is not None:
        for k in measure:
            if k not in ("head", "period", "equilibrium"):
                raise ConfigError(f"measure.{k}", "unknown key")
    return RunConfig(raw, m, f, run, system, measure)


def load_config(path: str, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Read, apply ``run`` overrides (e.g. from the command line) and validate."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("--config", f"file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<toml>", f"malformed TOML: {exc}") from None
    if overrides:
        run = dict(raw.get("run", {}))
        run.update({k: v for k, v in overrides.items() if v is not None})
        raw["run"] = run
    return parse_config(raw)
