"""Declarative TOML configuration covering every tunable module parameter.

Defaults reproduce the shipped parameter set; a config file overrides
defaults and CLI flags override the file. Unknown sections or keys are
rejected outright rather than silently ignored.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .alignment import ScoringScheme
from .errors import ConfigError
from .movement import HmmParams
from .pathmodel import NoiseModel
from .turns import TurnDetectorConfig


@dataclass(frozen=True)
class DecisionConfig:
    alpha: float = 0.5
    max_attempts: int = 10

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


@dataclass(frozen=True)
class IngestConfig:
    rate_hz: float = 20.0


_SECTIONS = {
    "detector": TurnDetectorConfig,
    "hmm": HmmParams,
    "scoring": ScoringScheme,
    "noise": NoiseModel,
    "decision": DecisionConfig,
    "ingest": IngestConfig,
}


@dataclass(frozen=True)
class Config:
    detector: TurnDetectorConfig = TurnDetectorConfig()
    hmm: HmmParams = HmmParams()
    scoring: ScoringScheme = ScoringScheme()
    noise: NoiseModel = NoiseModel()
    decision: DecisionConfig = DecisionConfig()
    ingest: IngestConfig = IngestConfig()

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        unknown = set(data) - set(_SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        kwargs = {}
        for section, target in _SECTIONS.items():
            if section not in data:
                continue
            values = data[section]
            names = {f.name for f in dataclasses.fields(target)}
            bad = set(values) - names
            if bad:
                raise ConfigError(f"unknown keys in [{section}]: {sorted(bad)}")
            if "initial" in values:
                values = dict(values, initial=tuple(values["initial"]))
            try:
                kwargs[section] = target(**values)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value in [{section}]: {exc}") from None
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "Config":
        with open(path, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"invalid TOML: {exc}") from None
        return cls.from_dict(data)
