"""Run configuration and its flat key-value text format.

Grammar, one setting per line:

    # comment (also allowed after a value)
    key = value
    section.key = value

Sections are ``robot`` (simulator constants), ``rl`` (gradient-learner
hyperparameters), ``cem`` (evolutionary hyperparameters); bare keys are
run-level settings. Value types follow the field being set: int, float,
bool (true/false/1/0), or string. Unknown keys are errors so typos
cannot silently fall back to defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .env import RobotConfig
from .rl import RlHyperparams

ALGORITHMS = ("ddpg", "td3", "cem_ddpg", "cem_td3")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CemHyperparams:
    population_size: int = 10
    elite_count: int = 5
    noise_floor: float = 1e-3
    noise_floor_final: float = 1e-5
    noise_decay: float = 0.999
    init_variance: float = 0.01
    grad_steps_cap: int = 100

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ConfigError("cem.population_size must be at least 2")
        if not 1 <= self.elite_count <= self.population_size:
            raise ConfigError("cem.elite_count must lie in [1, population_size]")
        if self.init_variance < 0.0 or self.noise_floor < 0.0:
            raise ConfigError("cem variances must be non-negative")
        if self.grad_steps_cap < 0:
            raise ConfigError("cem.grad_steps_cap must be non-negative")


@dataclass(frozen=True)
class RunConfig:
    algorithm: str = "ddpg"
    master_seed: int = 0
    episodes: int = 100
    generations: int = 50
    warmup_steps: int = 1000
    max_env_steps: int = 0
    t_max: int = 1000
    record_wall_time: bool = False
    out_dir: str = "run_output"
    terrain_amplitude: float = 0.03
    terrain_cell_size: float = 0.05
    terrain_extent: float = 8.0
    robot: RobotConfig = field(default_factory=RobotConfig)
    rl: RlHyperparams = field(default_factory=RlHyperparams)
    cem: CemHyperparams = field(default_factory=CemHyperparams)

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.episodes < 1 or self.generations < 1:
            raise ConfigError("training budget must be at least 1")
        if self.t_max < 1:
            raise ConfigError("t_max must be at least 1")
        if self.warmup_steps < 0 or self.max_env_steps < 0:
            raise ConfigError("step counts must be non-negative")

    @property
    def budget(self) -> int:
        """Episodes for the gradient learners, generations for the rest."""
        return self.episodes if self.algorithm in ("ddpg", "td3") else self.generations


_SECTIONS = {"robot": RobotConfig, "rl": RlHyperparams, "cem": CemHyperparams}
_RUN_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)
               if f.name not in _SECTIONS}


def _coerce(key: str, raw: str, default):
    kind = type(default)
    if kind is bool:
        lowered = raw.lower()
        if lowered in ("true", "1"):
            return True
        if lowered in ("false", "0"):
            return False
        raise ConfigError(f"{key}: expected true/false, got {raw!r}")
    if kind is int:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if kind is float:
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    if key == "algorithm":
        return raw.replace("-", "_")
    return raw


def _field_default(cls, name: str):
    for f in dataclasses.fields(cls):
        if f.name == name:
            if f.default is not dataclasses.MISSING:
                return f.default
            return f.default_factory()
    return dataclasses.MISSING


def parse_config(text: str, **overrides) -> RunConfig:
    """Parse config text; keyword overrides (e.g. from CLI flags) win."""
    top: dict = {}
    sections: dict[str, dict] = {name: {} for name in _SECTIONS}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = key.strip(), value.strip()
        section, dot, name = key.partition(".")
        if dot and section in _SECTIONS:
            default = _field_default(_SECTIONS[section], name)
            if default is dataclasses.MISSING:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            sections[section][name] = _coerce(key, value, default)
        elif not dot and key in _RUN_FIELDS:
            default = _field_default(RunConfig, key)
            top[key] = _coerce(key, value, default)
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    top.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(
            robot=RobotConfig(**sections["robot"]),
            rl=RlHyperparams(**sections["rl"]),
            cem=CemHyperparams(**sections["cem"]),
            **top,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str, **overrides) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), **overrides)


def config_to_dict(config: RunConfig) -> dict:
    """Flatten to dotted keys with JSON-native values (exact round trip).

    out_dir is omitted: it locates run artifacts rather than describing
    the experiment, and keeping it would make otherwise-identical
    checkpoints differ byte-wise across output directories.
    """
    out: dict = {}
    for f in dataclasses.fields(RunConfig):
        value = getattr(config, f.name)
        if f.name in _SECTIONS:
            for sub in dataclasses.fields(value):
                out[f"{f.name}.{sub.name}"] = getattr(value, sub.name)
        elif f.name != "out_dir":
            out[f.name] = value
    return out


def config_from_dict(data: dict) -> RunConfig:
    top: dict = {}
    sections: dict[str, dict] = {name: {} for name in _SECTIONS}
    for key, value in data.items():
        section, dot, name = key.partition(".")
        if dot and section in _SECTIONS:
            if _field_default(_SECTIONS[section], name) is dataclasses.MISSING:
                raise ConfigError(f"unknown config key {key!r}")
            sections[section][name] = value
        elif not dot and key in _RUN_FIELDS:
            top[key] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")
    try:
        return RunConfig(
            robot=RobotConfig(**sections["robot"]),
            rl=RlHyperparams(**sections["rl"]),
            cem=CemHyperparams(**sections["cem"]),
            **top,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
