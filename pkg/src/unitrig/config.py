"""Run configuration shared by every CLI verb.

A :class:`RunConfig` is plain data: it serializes to JSON inside the run
manifest and re-running from that manifest reproduces the artifacts.
Constants may be overridden from the environment with ``UNITRIG_<NAME>``
(e.g. ``UNITRIG_C_THRESH=0.5``); overrides are folded in when the config is
built from flags, so the manifest records the values actually used.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping

from .geometry import DEFAULT_TOL, EXACT, MODES
from .pipeline import PipelineParams, default_degree

VERBS = ("generate", "unitcount", "incidence", "partition", "extract", "rigidity",
         "conjecture", "congruence", "report")

ENV_PREFIX = "UNITRIG_"
CONSTANTS = ("c_occ", "c_cross", "c_cells", "c_thresh", "c1", "c2", "c3", "c4", "c5")


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass
class RunConfig:
    verb: str
    inputs: dict[str, str] = field(default_factory=dict)
    out: str = "."
    mode: str = EXACT
    tol: float = DEFAULT_TOL
    seed: int = 0
    params: dict[str, Any] = field(default_factory=dict)
    options: dict[str, Any] = field(default_factory=dict)

    def pipeline_params(self) -> PipelineParams:
        known = set(PipelineParams.__dataclass_fields__)
        kw = {k: v for k, v in self.params.items() if k in known}
        kw.setdefault("seed", self.seed)
        kw.setdefault("tol", self.tol)
        return PipelineParams(**kw)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: Mapping[str, Any]) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError([f"unknown config key {k!r}" for k in sorted(unknown)])
        if "verb" not in d:
            raise ConfigError(["config lacks 'verb'"])
        return cls(**{k: d[k] for k in d})


def _coerce(text: str, like):
    return int(text) if isinstance(like, int) else float(text)


def apply_env(cfg: RunConfig, environ: Mapping[str, str] | None = None) -> list[str]:
    """Fold ``UNITRIG_*`` overrides into ``cfg``; returns parse errors."""
    env = os.environ if environ is None else environ
    errs = []
    for name in CONSTANTS:
        key = ENV_PREFIX + name.upper()
        if key in env:
            try:
                cfg.params[name] = float(env[key])
            except ValueError:
                errs.append(f"{key}={env[key]!r} is not a number")
    for name in ("tol", "seed"):
        key = ENV_PREFIX + name.upper()
        if key in env:
            try:
                setattr(cfg, name, _coerce(env[key], getattr(cfg, name)))
            except ValueError:
                errs.append(f"{key}={env[key]!r} is not a number")
    return errs


def validate_config(cfg: RunConfig, n: int | None = None) -> RunConfig:
    """Fill defaults and check ranges; raises :class:`ConfigError` listing every problem."""
    errs = []
    if cfg.verb not in VERBS:
        errs.append(f"unknown verb {cfg.verb!r}; expected one of {', '.join(VERBS)}")
    if cfg.mode not in MODES:
        errs.append(f"mode must be one of {MODES}")
    if not (isinstance(cfg.tol, (int, float)) and cfg.tol > 0):
        errs.append("tol must be > 0")
    if not (isinstance(cfg.seed, int) and 0 <= cfg.seed < 2**63):
        errs.append("seed must be an integer in [0, 2^63)")
    h = cfg.params.get("h", 1.0)
    if not (isinstance(h, (int, float)) and h > 0):
        errs.append("h must be > 0")
    for name in CONSTANTS:
        v = cfg.params.get(name)
        if v is not None and not (isinstance(v, (int, float)) and v > 0):
            errs.append(f"{name} must be > 0")
    for name in ("r", "t", "degree"):
        v = cfg.params.get(name, cfg.options.get(name))
        if v is not None and not (isinstance(v, int) and v >= 1):
            errs.append(f"{name} must be an integer >= 1")
    res = cfg.params.get("resolution", cfg.options.get("resolution"))
    if res is not None and not (isinstance(res, int) and res >= 64):
        errs.append("resolution must be an integer >= 64")
    if errs:
        raise ConfigError(errs)
    if cfg.verb == "extract" and n is not None:
        for name in ("r", "t"):
            if cfg.params.get(name) is None:
                cfg.params[name] = default_degree(n, float(h))
    return cfg
