"""Engine factory and config (de)serialization shared by sweeps and sessions."""

from __future__ import annotations

import dataclasses
import random
from typing import Protocol, Sequence, Union

from .ga import GaConfig, GaEngine
from .genome import EvaluatedIndividual, Genotype, ParameterSpace
from .pso import PsoConfig, PsoEngine

ALGORITHMS = ("ga", "pso")

EngineConfig = Union[GaConfig, PsoConfig]


class Engine(Protocol):
    algorithm: str
    population: int
    history: list[EvaluatedIndividual]

    def ask(self) -> list[Genotype]: ...
    def tell(self, fitnesses: Sequence[float]) -> None: ...
    def best(self) -> EvaluatedIndividual | None: ...
    def snapshot(self) -> tuple: ...


def default_config(algorithm: str) -> EngineConfig:
    if algorithm == "ga":
        return GaConfig()
    if algorithm == "pso":
        return PsoConfig()
    raise ValueError(f"unknown algorithm {algorithm!r}")


def config_to_dict(config: EngineConfig) -> dict:
    return dataclasses.asdict(config)


def config_from_dict(algorithm: str, doc: dict | None) -> EngineConfig:
    """Build a config from a plain document, rejecting unknown fields by name."""
    cls = {"ga": GaConfig, "pso": PsoConfig}.get(algorithm)
    if cls is None:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    doc = dict(doc or {})
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown {algorithm} config fields: {', '.join(sorted(unknown))}")
    return cls(**doc)


def make_engine(algorithm: str, space: ParameterSpace, config: EngineConfig,
                rng: random.Random) -> Engine:
    if algorithm == "ga":
        if not isinstance(config, GaConfig):
            raise TypeError("ga engine needs a GaConfig")
        return GaEngine(space, config, rng)
    if algorithm == "pso":
        if not isinstance(config, PsoConfig):
            raise TypeError("pso engine needs a PsoConfig")
        return PsoEngine(space, config, rng)
    raise ValueError(f"unknown algorithm {algorithm!r}")
