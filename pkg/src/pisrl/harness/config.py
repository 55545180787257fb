"""Experiment configuration: flat ``key = value`` files with dotted overrides."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..environments import ENVIRONMENTS


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


# per-environment defaults used when theta / eta are left unset
ENV_DEFAULTS = {
    "car": {"theta": 0.1, "eta": 250},
    "pole": {"theta": 0.02, "eta": "auto"},
}


@dataclass
class ExperimentConfig:
    env: str = "car"
    seed: int = 0
    replicas: int = 1
    workers: int = 1
    theta: float | str | None = None
    eta: int | str | None = None
    sigma: list = field(default_factory=lambda: [0.09])
    Theta: float | str = "auto"
    Theta_fraction: float = 0.05
    gamma: float = 0.95
    alpha: float = 0.1
    initial_max_reward: str | float = "literal"
    estimate_episodes: int = 10
    clone_max_episodes: int = 100
    clone_window: int = 10
    clone_stop_fraction: float = 0.01
    eval_episodes: int = 50
    mc_episodes: int = 30
    improve_episodes: int = 500
    out: str = "runs/default"
    env_overrides: dict = field(default_factory=dict)

    def validate(self) -> "ExperimentConfig":
        if self.env not in ENVIRONMENTS:
            raise ConfigError(f"env: unknown environment {self.env!r} (choose from {sorted(ENVIRONMENTS)})")
        for name in ("replicas", "workers", "estimate_episodes", "clone_max_episodes",
                     "clone_window", "mc_episodes", "improve_episodes"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{_key(name)}: must be a positive integer")
        if self.seed < 0:
            raise ConfigError("seed: must be non-negative")
        if self.eval_episodes < 0:
            raise ConfigError("eval.episodes: must be non-negative")
        for name in ("gamma", "alpha", "Theta_fraction", "clone_stop_fraction"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ConfigError(f"{_key(name)}: must be a finite non-negative number")
        if self.gamma > 1:
            raise ConfigError("gamma: must lie in [0, 1]")
        if not self.sigma:
            raise ConfigError("sigma: at least one value required")
        for s in self.sigma:
            if not math.isfinite(s) or s < 0:
                raise ConfigError(f"sigma: {s} is not a finite non-negative number")
        if self.theta not in (None, "auto") and not (math.isfinite(self.theta) and self.theta > 0):
            raise ConfigError("theta: must be positive or 'auto'")
        if self.eta not in (None, "auto") and self.eta < 1:
            raise ConfigError("eta: must be a positive integer or 'auto'")
        if self.Theta != "auto" and not (math.isfinite(self.Theta) and self.Theta >= 0):
            raise ConfigError("Theta: must be non-negative or 'auto'")
        if self.initial_max_reward not in ("literal", "clone") and not math.isfinite(self.initial_max_reward):
            raise ConfigError("improve.initial_max_reward: must be 'literal', 'clone' or a number")
        make_environment(self)  # surfaces bad environment overrides
        return self

    def resolved(self, name):
        value = getattr(self, name)
        return ENV_DEFAULTS[self.env][name] if value is None else value

    def with_values(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


# file key -> attribute
_KEYS = {
    "env": "env",
    "seed": "seed",
    "replicas": "replicas",
    "workers": "workers",
    "theta": "theta",
    "eta": "eta",
    "sigma": "sigma",
    "Theta": "Theta",
    "Theta.fraction": "Theta_fraction",
    "gamma": "gamma",
    "alpha": "alpha",
    "improve.initial_max_reward": "initial_max_reward",
    "estimate.episodes": "estimate_episodes",
    "clone.max_episodes": "clone_max_episodes",
    "clone.window": "clone_window",
    "clone.stop_fraction": "clone_stop_fraction",
    "eval.episodes": "eval_episodes",
    "mc.episodes": "mc_episodes",
    "improve.episodes": "improve_episodes",
    "out": "out",
}
_ATTR_TO_KEY = {v: k for k, v in _KEYS.items()}


def _key(attr):
    return _ATTR_TO_KEY.get(attr, attr)


def _parse_number(key, text, kind):
    try:
        if kind is int:
            f = float(text)
            if not f.is_integer():
                raise ValueError
            return int(f)
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected {'an integer' if kind is int else 'a number'}, got {text!r}") from None


def _convert(key, text):
    attr = _KEYS[key]
    text = text.strip()
    if attr in ("env", "out"):
        return text
    if attr == "sigma":
        return [_parse_number(key, t, float) for t in text.replace(";", ",").split(",") if t.strip()]
    if attr in ("theta", "Theta") and text == "auto":
        return "auto"
    if attr == "eta":
        return "auto" if text == "auto" else _parse_number(key, text, int)
    if attr == "initial_max_reward":
        return text if text in ("literal", "clone") else _parse_number(key, text, float)
    default = {f.name: f for f in dataclasses.fields(ExperimentConfig)}[attr].default
    return _parse_number(key, text, int if isinstance(default, int) else float)


def apply_setting(cfg: ExperimentConfig, key: str, value: str) -> ExperimentConfig:
    key = key.strip()
    if key in _KEYS:
        setattr(cfg, _KEYS[key], _convert(key, value))
    elif key.split(".", 1)[0] in ENVIRONMENTS and "." in key:
        cfg.env_overrides[key] = value.strip()
    else:
        raise ConfigError(f"{key}: unknown configuration key")
    return cfg


def parse_config(text: str, cfg: ExperimentConfig | None = None) -> ExperimentConfig:
    cfg = cfg or ExperimentConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        apply_setting(cfg, key, value)
    return cfg


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def make_environment(cfg: ExperimentConfig):
    """Build ``(env, teacher)`` for the configured task with overrides applied."""
    factory = ENVIRONMENTS[cfg.env]
    ours = {k.split(".", 1)[1]: v for k, v in cfg.env_overrides.items() if k.startswith(cfg.env + ".")}
    try:
        return factory(ours)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"{cfg.env}.*: {exc}") from None
