"""Experiment configuration: one YAML document per experiment.

Example::

    process:
      nu: 0.3
      delta: 0.8
      L: {family: constant, c: 1.0}
      ell: {family: constant, c: 1.0}
    grids:
      t: {logspace: [1, 4, 13]}
      s: [0.0, 0.5, 0.9]
      tau: [0.1, 1.0, 10.0]
    truncation: {J: 16384, N: 64, radius: 0.7, invariance_t: 1.0}
    montecarlo: {replications: 100000, seed: 0, cap: 10000000, t: 1.0, i: 0, j: [0, 1, 2]}
    output: results
    validators: [thm1, schroder, invariance]

Grids may be explicit lists or ``{logspace: [lo, hi, n]}`` / ``{linspace: [lo, hi, n]}``;
they are expanded at parse time so that a parsed config serializes to
explicit lists and round-trips exactly.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .errors import ArgumentError, ConfigError
from .laws import ProcessSpec

VALIDATORS = ("thm1", "thm2", "thm4", "cor1", "ratio_limit", "schroder", "invariance", "mc")
C_MATCH_RTOL = 1e-9


@dataclass(frozen=True)
class Grids:
    t: tuple = tuple(float(x) for x in np.logspace(1, 4, 13))
    s: tuple = (0.0, 0.25, 0.5, 0.75, 0.9)
    tau: tuple = (0.1, 1.0, 10.0)


@dataclass(frozen=True)
class Truncation:
    J: int = 2**14
    N: int = 64
    radius: float = 0.7
    invariance_t: float = 1.0
    ratio_N: int = 8


@dataclass(frozen=True)
class MCSettings:
    replications: int = 10**5
    seed: int = 0
    cap: int = 10**7
    t: float = 1.0
    i: int = 0
    j: tuple = (0, 1, 2)
    J: int = 2**20


@dataclass(frozen=True)
class ExperimentConfig:
    process: ProcessSpec
    grids: Grids = field(default_factory=Grids)
    truncation: Truncation = field(default_factory=Truncation)
    montecarlo: MCSettings = field(default_factory=MCSettings)
    output: str = "results"
    validators: tuple = ()

    def to_dict(self):
        return {
            "process": self.process.to_dict(),
            "grids": {k: list(v) for k, v in asdict(self.grids).items()},
            "truncation": asdict(self.truncation),
            "montecarlo": {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self.montecarlo).items()},
            "output": self.output,
            "validators": list(self.validators),
        }

    def dumps(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)

    def header(self):
        """One-line serialization embedded in every output file."""
        return "config=" + yaml.safe_dump(self.to_dict(), default_flow_style=True, width=10**9).strip()

    def with_overrides(self, seed=None, output=None):
        cfg = self
        if seed is not None:
            cfg = replace(cfg, montecarlo=replace(cfg.montecarlo, seed=int(seed)))
        if output is not None:
            cfg = replace(cfg, output=str(output))
        return cfg


def _grid(value, name):
    if isinstance(value, dict):
        if len(value) != 1:
            raise ConfigError(f"grid {name!r}: expected one of logspace/linspace")
        (kind, args), = value.items()
        if kind not in ("logspace", "linspace") or len(args) != 3:
            raise ConfigError(f"grid {name!r}: expected {{logspace|linspace: [lo, hi, n]}}")
        fn = np.logspace if kind == "logspace" else np.linspace
        value = fn(float(args[0]), float(args[1]), int(args[2]))
    try:
        out = tuple(float(x) for x in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grid {name!r} is not a list of numbers") from exc
    if not out:
        raise ConfigError(f"grid {name!r} is empty")
    return out


def _section(cls, data, name, conv):
    data = dict(data or {})
    known = {f for f in cls.__dataclass_fields__}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown keys in {name}: {sorted(extra)}")
    try:
        return cls(**{k: conv.get(k, lambda v: v)(v) for k, v in data.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value in {name}: {exc}") from exc


def check_validators(spec: ProcessSpec, validators):
    """Reject validator/regime pairings; the message names the violated condition."""
    g = spec.gamma
    for v in validators:
        if v not in VALIDATORS:
            raise ConfigError(f"unknown validator {v!r}; expected one of {VALIDATORS}")
    if spec.regime == "boundary" and validators:
        raise ConfigError("γ ≠ 0 required: gamma = 0 is outside the supported regimes")
    needs_rec = {"thm1"}
    needs_thm4 = {"thm4", "cor1"}
    # the transient limit objects exist only under the pi conditions
    needs_regime_measure = {"schroder", "invariance", "ratio_limit"}
    for v in validators:
        if v in needs_rec and not g > 0:
            raise ConfigError(f"validator {v}: γ > 0 required (gamma = {g:.6g})")
        if v == "thm2" and not g < 0:
            raise ConfigError(f"validator {v}: γ < 0 required (gamma = {g:.6g})")
        if v in needs_thm4 or (v in needs_regime_measure and g < 0):
            if not g < 0:
                raise ConfigError(f"validator {v}: γ < 0 required (gamma = {g:.6g})")
            C = spec.C
            if C is None or not math.isclose(C, -g, rel_tol=C_MATCH_RTOL):
                raise ConfigError(f"validator {v}: C = |γ| required (C = {C}, |gamma| = {-g:.6g})")
            if not 1 < spec.nu / spec.delta < 2:
                raise ConfigError(f"validator {v}: 1 < ν/δ < 2 required (nu/delta = {spec.nu / spec.delta:.6g})")
        if v in ("thm1", "thm2", "thm4", "cor1") and spec.C is None:
            raise ConfigError(f"validator {v}: ell/L must have a finite limit")
        if v == "mc" and not spec.analytic:
            raise ConfigError("validator mc: analytic families required to build intensity tables")


def from_dict(data) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    extra = set(data) - {"process", "grids", "truncation", "montecarlo", "output", "validators"}
    if extra:
        raise ConfigError(f"unknown top-level keys: {sorted(extra)}")
    if "process" not in data:
        raise ConfigError("missing 'process' section")
    try:
        spec = ProcessSpec.from_dict(data["process"])
    except (KeyError, TypeError, ValueError, ArgumentError) as exc:
        raise ConfigError(f"bad process section: {exc}") from exc
    grids = _section(Grids, data.get("grids"), "grids", {k: (lambda v, k=k: _grid(v, k)) for k in ("t", "s", "tau")})
    trunc = _section(Truncation, data.get("truncation"), "truncation",
                     {"J": int, "N": int, "radius": float, "invariance_t": float, "ratio_N": int})
    mc = _section(MCSettings, data.get("montecarlo"), "montecarlo",
                  {"replications": int, "seed": int, "cap": int, "t": float, "i": int,
                   "j": lambda v: tuple(int(x) for x in v), "J": int})
    validators = tuple(data.get("validators") or ())
    if list(grids.t) != sorted(set(grids.t)) or grids.t[0] <= 0:
        raise ConfigError("grid 't' must be positive and strictly increasing")
    if any(not 0 <= s < 1 for s in grids.s):
        raise ConfigError("grid 's' must lie in [0, 1)")
    if not 0 < trunc.radius < 1:
        raise ConfigError("truncation radius must lie in (0, 1)")
    if mc.replications < 1 or mc.seed < 0 or mc.seed >= 2**64:
        raise ConfigError("montecarlo: need replications >= 1 and 0 <= seed < 2**64")
    check_validators(spec, validators)
    return ExperimentConfig(spec, grids, trunc, mc, str(data.get("output", "results")), validators)


def loads(text) -> ExperimentConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    return from_dict(data)


def load(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads(text)
