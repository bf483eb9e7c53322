"""Service configuration.

Sources, in increasing priority: built-in defaults, a JSON config file,
TACMINE_* environment variables.  The file path itself comes from
TACMINE_CONFIG or the config_path argument.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8099
    data_dir: str = "./tacmine-data"
    default_seed: int = 1
    max_iterations: int = 200
    candidates_per_iteration: int = 200
    max_tactic_length: int = 8
    alpha: float = 1.0
    beta: float = 1.0
    job_poll_seconds: float = 0.1

    def check(self) -> "ServiceConfig":
        if self.port <= 0 or self.port > 65535:
            raise ValueError(f"port out of range: {self.port}")
        if self.max_iterations <= 0 or self.candidates_per_iteration <= 0:
            raise ValueError("iteration limits must be positive")
        if self.max_tactic_length <= 0:
            raise ValueError("max_tactic_length must be positive")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        return self


_ENV_PREFIX = "TACMINE_"

_FIELD_TYPES = {f.name: f.type for f in fields(ServiceConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    if kind in ("int", int):
        return int(raw)
    if kind in ("float", float):
        return float(raw)
    return raw


def load_config(config_path: Optional[str] = None, env: Optional[dict] = None) -> ServiceConfig:
    if env is None:
        env = dict(os.environ)
    cfg = ServiceConfig()

    path = config_path or env.get(_ENV_PREFIX + "CONFIG")
    if path:
        doc = json.loads(Path(path).read_text())
        unknown = set(doc) - set(_FIELD_TYPES)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = replace(cfg, **doc)

    overrides = {}
    for name in _FIELD_TYPES:
        raw = env.get(_ENV_PREFIX + name.upper())
        if raw is not None:
            overrides[name] = _coerce(name, raw)
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg.check()
