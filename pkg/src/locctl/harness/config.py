"""Scenario configuration: JSON round-trip, strict key checking, stable hashing
and counter-based seeding."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field, fields
from typing import Any, Optional

import numpy as np


class ConfigError(ValueError):
    """Invalid configuration. ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


CONTROLLERS = ("oen_ftrl", "oen_ftrl_ap", "oen_ftrl_uap", "probing_oco", "nested_bco",
               "state_targeting", "linear_policy", "application")

# keys accepted inside the nested "controller_config" mapping
CONTROLLER_KEYS = ("L", "rho", "alpha", "gamma", "G", "eta", "probe_eps", "x1", "K", "y_hat",
                   "enforce_cap")


@dataclass
class ScenarioConfig:
    scenario: str
    model: dict = field(default_factory=dict)
    controller: str = "oen_ftrl"
    controller_config: dict = field(default_factory=dict)
    losses: dict = field(default_factory=dict)
    adversary: Optional[dict] = None
    T: int = 1000
    seeds: list = field(default_factory=lambda: [0])
    output: Optional[str] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not isinstance(self.scenario, str) or not self.scenario:
            raise ConfigError("scenario", "must be a non-empty string")
        if self.controller not in CONTROLLERS:
            raise ConfigError("controller", f"unknown controller {self.controller!r}; "
                                            f"expected one of {', '.join(CONTROLLERS)}")
        for k in self.controller_config:
            if k not in CONTROLLER_KEYS:
                raise ConfigError(f"controller_config.{k}", "unknown key")
        if isinstance(self.T, bool) or not isinstance(self.T, int) or self.T < 0:
            raise ConfigError("T", "must be a nonnegative integer")
        if not isinstance(self.seeds, list) or not self.seeds:
            raise ConfigError("seeds", "must be a non-empty list of integers")
        for s in self.seeds:
            if isinstance(s, bool) or not isinstance(s, int) or s < 0:
                raise ConfigError("seeds", f"bad seed {s!r}")
        for name in ("model", "losses", "controller_config"):
            if not isinstance(getattr(self, name), dict):
                raise ConfigError(name, "must be a mapping")
        if self.adversary is not None and not isinstance(self.adversary, dict):
            raise ConfigError("adversary", "must be a mapping or null")

    def to_dict(self):
        return {f.name: copy.deepcopy(getattr(self, f.name)) for f in fields(self)}

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict[str, Any]):
        if not isinstance(data, dict):
            raise ConfigError("<root>", "configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        for k in data:
            if k not in known:
                raise ConfigError(k, "unknown key")
        if "scenario" not in data:
            raise ConfigError("scenario", "missing")
        return cls(**copy.deepcopy(data))

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("<json>", str(exc)) from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def replace(self, **changes):
        d = self.to_dict()
        d.update(changes)
        return ScenarioConfig.from_dict(d)

    def config_hash(self):
        """sha256 of the canonical JSON form. The output path does not affect a
        run, so it is left out."""
        d = self.to_dict()
        d.pop("output")
        blob = json.dumps(_canonical(d), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _canonical(obj):
    # ints and integral floats hash the same; everything else is left alone
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, float) and obj.is_integer():
        return int(obj)
    return obj


def rng_for(seed, stream=0):
    """Independent generator for (seed, stream). Philox is counter based, so a
    stream's draws do not depend on what other streams consumed."""
    return np.random.Generator(np.random.Philox(key=[int(seed), int(stream)]))
