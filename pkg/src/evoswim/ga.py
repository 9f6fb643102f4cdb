"""Genetic-algorithm variant over the quantized grid.

Generation pipeline: pick parent pairs from the selection pool (rank or
roulette probabilities), mutate both parents *before* crossover (constant or
fitness-adaptive fractional rate), uniform half-gene crossover, then resolve
duplicates against the full evaluation history and the current batch by
repeated single-gene mutation.

Draw order on the shared rng stream, per generation: all pair selections
(including within-pair redraws), then per pair in order: parent-A mutation
count / positions / replacement values, parent-B likewise, crossover subset;
finally duplicate-fix mutations in child order. A fractional mutation rate
consumes its Bernoulli draw only when the fractional part is nonzero.
"""

from __future__ import annotations

import math
import random
from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Sequence

from .genome import (
    EvaluatedIndividual,
    Genotype,
    ParameterSpace,
    SpaceExhaustedError,
    mutate_gene,
    mutate_random_gene,
    random_distinct_genotypes,
)

SELECTION_METHODS = ("rank", "roulette")
POOL_STRATEGIES = ("elite8", "all_history")


@dataclass(frozen=True)
class GaConfig:
    """Every GA tunable the simulation study sweeps.

    With ``adaptive`` off the rate is constant and ``m_min == m_max`` is
    required (the experiments used a constant rate of one).
    """

    selection: str = "rank"
    pool: str = "elite8"
    m_min: float = 1.0
    m_max: float = 1.0
    adaptive: bool = False
    population: int = 8
    pairs: int = 4

    def __post_init__(self) -> None:
        if self.selection not in SELECTION_METHODS:
            raise ValueError(f"selection must be one of {SELECTION_METHODS}")
        if self.pool not in POOL_STRATEGIES:
            raise ValueError(f"pool must be one of {POOL_STRATEGIES}")
        if self.m_min < 0:
            raise ValueError("m_min must be >= 0")
        if self.m_max < self.m_min:
            raise ValueError("m_max must be >= m_min")
        if not self.adaptive and self.m_min != self.m_max:
            raise ValueError("non-adaptive configs need m_min == m_max (constant rate)")
        if self.pairs < 1:
            raise ValueError("pairs must be >= 1")
        if self.population != 2 * self.pairs:
            raise ValueError("population must equal 2 * pairs")

    @classmethod
    def constant_rate(cls, rate: float, **kwargs) -> "GaConfig":
        return cls(m_min=rate, m_max=rate, adaptive=False, **kwargs)


@dataclass
class GaState:
    """Everything evaluated so far; genotypes in history are pairwise distinct."""

    history: list[EvaluatedIndividual] = field(default_factory=list)
    generation: int = 0

    @property
    def f_max_seen(self) -> float:
        return max((e.fitness for e in self.history), default=0.0)


def rank_probabilities(n: int) -> list[float]:
    """Selection probability by rank k (0 = best): B(1-B)^k + (1-B)^n / n, B = n^(-2/3)."""
    if n < 1:
        raise ValueError("pool size must be >= 1")
    b = n ** (-2.0 / 3.0)
    tail = (1.0 - b) ** n / n
    return [b * (1.0 - b) ** k + tail for k in range(n)]


def roulette_probabilities(fitnesses: Sequence[float]) -> list[float]:
    """Probability proportional to fitness; all-zero falls back to uniform."""
    if not fitnesses:
        raise ValueError("empty fitness list")
    for f in fitnesses:
        if not math.isfinite(f) or f < 0:
            raise ValueError(f"roulette selection needs finite nonnegative fitness, got {f}")
    total = sum(fitnesses)
    if total == 0:
        return [1.0 / len(fitnesses)] * len(fitnesses)
    return [f / total for f in fitnesses]


def selection_pool(state: GaState, config: GaConfig) -> list[EvaluatedIndividual]:
    """Candidates for parenthood, best first, ties broken by earlier id.

    ``elite8``: the top ``population`` individuals found across the whole run.
    ``all_history``: everyone evaluated so far.
    """
    if not state.history:
        raise ValueError("selection pool needs a nonempty history")
    ordered = sorted(state.history, key=lambda e: (-e.fitness, e.id))
    if config.pool == "elite8":
        return ordered[: config.population]
    return ordered


def _weighted_index(cumulative: Sequence[float], rng: random.Random) -> int:
    x = rng.random() * cumulative[-1]
    return min(bisect_right(cumulative, x), len(cumulative) - 1)


def select_pairs(pool: Sequence[EvaluatedIndividual], probs: Sequence[float],
                 pairs: int, rng: random.Random,
                 ) -> list[tuple[EvaluatedIndividual, EvaluatedIndividual]]:
    """Draw parent pairs with replacement; within a pair the members differ.

    The second member is redrawn until it differs from the first. If fewer
    than two pool members carry positive probability the redraw cannot
    terminate, so the second member is drawn uniformly among the rest
    instead (same conditional distribution wherever that is defined).
    """
    if len(pool) < 2:
        raise ValueError("cannot form a pair from a pool of fewer than 2")
    if len(pool) != len(probs):
        raise ValueError("pool and probability lengths differ")
    cumulative = list(accumulate(probs))
    positive = sum(1 for p in probs if p > 0)
    out = []
    for _ in range(pairs):
        a = _weighted_index(cumulative, rng)
        if positive >= 2:
            b = _weighted_index(cumulative, rng)
            while b == a:
                b = _weighted_index(cumulative, rng)
        else:
            b = rng.randrange(len(pool) - 1)
            if b >= a:
                b += 1
        out.append((pool[a], pool[b]))
    return out


def mutation_count(rate: float, rng: random.Random) -> int:
    """floor(rate) guaranteed mutations plus one more with probability rate - floor(rate)."""
    if rate < 0:
        raise ValueError("mutation rate must be >= 0")
    base = math.floor(rate)
    frac = rate - base
    if frac > 0 and rng.random() < frac:
        base += 1
    return base


def adaptive_rate(f: float, f_max: float, m_min: float, m_max: float) -> float:
    """Fitness-adaptive rate: (f_max - f)(m_max - m_min)/f_max + m_min."""
    if f_max <= 0:
        return m_max
    if not 0 <= f <= f_max:
        raise ValueError("adaptive rate needs 0 <= f <= f_max")
    return (f_max - f) * (m_max - m_min) / f_max + m_min


def uniform_crossover(parent_a: Genotype, parent_b: Genotype,
                      rng: random.Random) -> tuple[Genotype, Genotype]:
    """Half-gene uniform crossover with complementary children.

    A uniformly random half-size subset of positions comes from parent A in
    the first child; the second child takes the complement, so every gene of
    both parents is used exactly once.
    """
    n = len(parent_a.indices)
    if len(parent_b.indices) != n:
        raise ValueError("parents come from different spaces")
    from_a = set(rng.sample(range(n), n // 2))
    child1 = tuple(parent_a.indices[i] if i in from_a else parent_b.indices[i]
                   for i in range(n))
    child2 = tuple(parent_b.indices[i] if i in from_a else parent_a.indices[i]
                   for i in range(n))
    return Genotype(child1), Genotype(child2)


def _mutate_genes(space: ParameterSpace, genotype: Genotype, count: int,
                  rng: random.Random) -> Genotype:
    """Mutate ``count`` distinct, randomly chosen positions."""
    count = min(count, len(space.dimensions))
    if count == 0:
        return genotype
    for d in rng.sample(range(len(space.dimensions)), count):
        genotype = mutate_gene(space, genotype, d, rng)
    return genotype


def next_generation(state: GaState, config: GaConfig, space: ParameterSpace,
                    rng: random.Random) -> list[Genotype]:
    """Produce ``population`` fresh genotypes, never seen before in this run."""
    taboo = {e.genotype for e in state.history}
    if len(taboo) >= space.cardinality():
        raise SpaceExhaustedError("search space exhausted")

    pool = selection_pool(state, config)
    if config.selection == "rank":
        probs = rank_probabilities(len(pool))
    else:
        probs = roulette_probabilities([e.fitness for e in pool])
    parent_pairs = select_pairs(pool, probs, config.pairs, rng)

    f_max = state.f_max_seen
    children: list[Genotype] = []
    for parent_a, parent_b in parent_pairs:
        copies = []
        for parent in (parent_a, parent_b):
            if config.adaptive:
                rate = adaptive_rate(parent.fitness, f_max, config.m_min, config.m_max)
            else:
                rate = config.m_min
            copies.append(_mutate_genes(space, parent.genotype,
                                        mutation_count(rate, rng), rng))
        children.extend(uniform_crossover(copies[0], copies[1], rng))

    accepted: list[Genotype] = []
    for child in children:
        while child in taboo:
            if len(taboo) >= space.cardinality():
                raise SpaceExhaustedError("search space exhausted")
            child = mutate_random_gene(space, child, rng)
        accepted.append(child)
        taboo.add(child)
    return accepted


class GaEngine:
    """Ask/tell driver: ask() proposes a generation, tell() records fitnesses.

    The first ask() returns ``population`` distinct random genotypes; later
    ones run :func:`next_generation`. Individuals get monotone ids in
    evaluation order.
    """

    algorithm = "ga"

    def __init__(self, space: ParameterSpace, config: GaConfig, rng: random.Random):
        self.space = space
        self.config = config
        self.rng = rng
        self.state = GaState()
        self._pending: list[Genotype] | None = None

    @property
    def population(self) -> int:
        return self.config.population

    @property
    def history(self) -> list[EvaluatedIndividual]:
        return self.state.history

    def ask(self) -> list[Genotype]:
        if self._pending is not None:
            raise RuntimeError("ask() called again before tell()")
        if not self.state.history:
            proposed = random_distinct_genotypes(self.space, self.config.population, self.rng)
        else:
            proposed = next_generation(self.state, self.config, self.space, self.rng)
        self._pending = proposed
        return list(proposed)

    def tell(self, fitnesses: Sequence[float]) -> None:
        if self._pending is None:
            raise RuntimeError("tell() called without a pending ask()")
        if len(fitnesses) != len(self._pending):
            raise ValueError(f"expected {len(self._pending)} fitness values, got {len(fitnesses)}")
        next_id = len(self.state.history)
        for g, f in zip(self._pending, fitnesses):
            self.state.history.append(EvaluatedIndividual(
                id=next_id, genotype=g, fitness=float(f),
                generation=self.state.generation))
            next_id += 1
        self.state.generation += 1
        self._pending = None

    def best(self) -> EvaluatedIndividual | None:
        if not self.state.history:
            return None
        return min(self.state.history, key=lambda e: (-e.fitness, e.id))

    def snapshot(self) -> tuple:
        """Comparable full state, including the rng position (for replay tests)."""
        return (tuple(self.state.history), self.state.generation,
                tuple(self._pending) if self._pending is not None else None,
                self.rng.getstate())
