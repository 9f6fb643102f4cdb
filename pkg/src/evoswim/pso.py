"""Particle-swarm variant on the quantized grid.

Velocity and position updates run in raw coordinates; the evaluated genotype
is the position quantized onto the grid (periodic wrap for the polarization
angle, clipping elsewhere). Raw positions persist across iterations; the
genotype is a view.

Draw order on the shared rng stream: particles step in index order; each
attempt of a step draws r1 then r2; the duplicate-escape mutation draws the
dimension then the replacement value, repeated until fresh. register_fitness
draws one reset scalar u whenever a particle attains a new global best,
again in particle index order within a tell.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Sequence

from .genome import (
    EvaluatedIndividual,
    Genotype,
    ParameterSpace,
    SpaceExhaustedError,
    mutate_random_gene,
    quantize,
    random_distinct_genotypes,
)


@dataclass(frozen=True)
class PsoConfig:
    """Inertia, cognitive and social coefficients plus dedup budget.

    The lab experiments used w=0, c1=0.2, c2=1.4.
    """

    w: float = 0.0
    c1: float = 0.2
    c2: float = 1.4
    swarm: int = 8
    max_dedup_steps: int = 5

    def __post_init__(self) -> None:
        for name in ("w", "c1", "c2"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.swarm < 2:
            raise ValueError("swarm must be >= 2")
        if self.max_dedup_steps < 0:
            raise ValueError("max_dedup_steps must be >= 0")


@dataclass
class Particle:
    position: list[float]
    velocity: list[float]
    pbest_position: list[float]
    pbest_fitness: float
    genotype: Genotype


@dataclass
class SwarmState:
    particles: list[Particle]
    gbest_position: list[float]
    gbest_fitness: float
    evaluated: set[Genotype] = field(default_factory=set)
    generation: int = 0


def velocity_update(particle: Particle, gbest_position: Sequence[float],
                    config: PsoConfig, space: ParameterSpace,
                    rng: random.Random) -> list[float]:
    """w*v + c1*r1*(pbest - x) + c2*r2*(gbest - x), clamped to +-(max - min).

    r1 and r2 are single scalars per update, shared by all components.
    """
    r1 = rng.random()
    r2 = rng.random()
    out = []
    for d, dim in enumerate(space.dimensions):
        x = particle.position[d]
        v = (config.w * particle.velocity[d]
             + config.c1 * r1 * (particle.pbest_position[d] - x)
             + config.c2 * r2 * (gbest_position[d] - x))
        limit = dim.span
        out.append(max(-limit, min(limit, v)))
    return out


def position_update(particle: Particle, velocity: Sequence[float],
                    space: ParameterSpace) -> tuple[list[float], Genotype]:
    """x + v, wrapped on periodic dimensions, clipped to bounds elsewhere."""
    position = []
    for d, dim in enumerate(space.dimensions):
        x = particle.position[d] + velocity[d]
        if dim.periodic:
            assert dim.period is not None
            x %= dim.period
        else:
            x = max(dim.minimum, min(dim.maximum, x))
        position.append(x)
    return position, quantize(space, position)


def gbest_reset_velocity(space: ParameterSpace, rng: random.Random) -> list[float]:
    """One scalar u in [-1, 1] times the per-dimension range vector."""
    u = rng.uniform(-1.0, 1.0)
    return [u * dim.span for dim in space.dimensions]


def register_fitness(state: SwarmState, index: int, fitness: float,
                     space: ParameterSpace, rng: random.Random) -> None:
    """Record a particle's fitness; a new global best resets its velocity."""
    particle = state.particles[index]
    if fitness > particle.pbest_fitness:
        particle.pbest_fitness = fitness
        particle.pbest_position = list(particle.position)
    if fitness > state.gbest_fitness:
        state.gbest_fitness = fitness
        state.gbest_position = list(particle.position)
        particle.velocity = gbest_reset_velocity(space, rng)


def next_generation(state: SwarmState, config: PsoConfig, space: ParameterSpace,
                    rng: random.Random) -> list[Genotype]:
    """Step every particle and return the swarm's new genotypes.

    A genotype already evaluated in a *previous* iteration triggers up to
    ``max_dedup_steps`` additional PSO steps (the particle keeps moving, with
    fresh r1/r2); if it is still stale, single random gene mutations are
    applied until the genotype is fresh and the particle's position snaps to
    that genotype's raw values with its velocity retained. Duplicates within
    the new generation are permitted.
    """
    if len(state.evaluated) >= space.cardinality():
        raise SpaceExhaustedError("search space exhausted")
    proposed: list[Genotype] = []
    for particle in state.particles:
        velocity = velocity_update(particle, state.gbest_position, config, space, rng)
        position, genotype = position_update(particle, velocity, space)
        for _ in range(config.max_dedup_steps):
            if genotype not in state.evaluated:
                break
            particle.position = position
            particle.velocity = velocity
            velocity = velocity_update(particle, state.gbest_position, config, space, rng)
            position, genotype = position_update(particle, velocity, space)
        if genotype in state.evaluated:
            while genotype in state.evaluated:
                if len(state.evaluated) >= space.cardinality():
                    raise SpaceExhaustedError("search space exhausted")
                genotype = mutate_random_gene(space, genotype, rng)
            position = list(space.values_of(genotype))
        particle.position = position
        particle.velocity = velocity
        particle.genotype = genotype
        proposed.append(genotype)
    return proposed


class PsoEngine:
    """Ask/tell driver around :class:`SwarmState`.

    The first ask() returns ``swarm`` distinct random genotypes and places
    the particles on them with zero velocity; the first tell() immediately
    energizes the initial global best through the reset rule.
    """

    algorithm = "pso"

    def __init__(self, space: ParameterSpace, config: PsoConfig, rng: random.Random):
        self.space = space
        self.config = config
        self.rng = rng
        self.state: SwarmState | None = None
        self.history: list[EvaluatedIndividual] = []
        self._pending: list[Genotype] | None = None

    @property
    def population(self) -> int:
        return self.config.swarm

    def ask(self) -> list[Genotype]:
        if self._pending is not None:
            raise RuntimeError("ask() called again before tell()")
        if self.state is None:
            genotypes = random_distinct_genotypes(self.space, self.config.swarm, self.rng)
            particles = []
            for g in genotypes:
                position = list(self.space.values_of(g))
                particles.append(Particle(
                    position=position, velocity=[0.0] * len(position),
                    pbest_position=list(position), pbest_fitness=-math.inf,
                    genotype=g))
            self.state = SwarmState(
                particles=particles,
                gbest_position=list(particles[0].position),
                gbest_fitness=-math.inf)
            self._pending = genotypes
        else:
            self._pending = next_generation(self.state, self.config, self.space, self.rng)
        return list(self._pending)

    def tell(self, fitnesses: Sequence[float]) -> None:
        if self._pending is None:
            raise RuntimeError("tell() called without a pending ask()")
        assert self.state is not None
        if len(fitnesses) != len(self._pending):
            raise ValueError(f"expected {len(self._pending)} fitness values, got {len(fitnesses)}")
        next_id = len(self.history)
        for i, (g, f) in enumerate(zip(self._pending, fitnesses)):
            register_fitness(self.state, i, float(f), self.space, self.rng)
            self.history.append(EvaluatedIndividual(
                id=next_id, genotype=g, fitness=float(f),
                generation=self.state.generation))
            next_id += 1
        self.state.evaluated.update(self._pending)
        self.state.generation += 1
        self._pending = None

    def best(self) -> EvaluatedIndividual | None:
        if not self.history:
            return None
        return min(self.history, key=lambda e: (-e.fitness, e.id))

    def snapshot(self) -> tuple:
        """Comparable full state, including the rng position (for replay tests)."""
        if self.state is None:
            swarm = None
        else:
            swarm = (
                tuple((tuple(p.position), tuple(p.velocity), tuple(p.pbest_position),
                       p.pbest_fitness, p.genotype) for p in self.state.particles),
                tuple(self.state.gbest_position), self.state.gbest_fitness,
                frozenset(self.state.evaluated), self.state.generation)
        return (swarm, tuple(self.history),
                tuple(self._pending) if self._pending is not None else None,
                self.rng.getstate())
