"""Fitness providers: the Gaussian-sum surrogate and the external (measured) kind.

The surrogate scores a genotype as a sum of one-dimensional normal densities
over the *normalized* coordinates, with the peak shifted to 0.75 of each
value range so that binary dimensions still differentiate. It is a benchmark
landscape, not robot physics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

from .genome import Genotype, ParameterSpace, normalize

STUDY_SIGMAS = (0.05, 0.1, 0.25, 0.5)


class FitnessProvider(Protocol):
    def evaluate(self, genotype: Genotype) -> float: ...
    def descriptor(self) -> dict: ...


@dataclass(frozen=True)
class SurrogateParams:
    sigma: float
    peak_fraction: float = 0.75

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if not 0.0 <= self.peak_fraction <= 1.0:
            raise ValueError("peak_fraction must lie in [0, 1]")


def _density(normalized: float, params: SurrogateParams) -> float:
    z = (normalized - params.peak_fraction) / params.sigma
    return math.exp(-0.5 * z * z) / (params.sigma * math.sqrt(2.0 * math.pi))


def gaussian_sum(space: ParameterSpace, genotype: Genotype,
                 params: SurrogateParams) -> float:
    """Sum over dimensions of N(peak_fraction, sigma) densities at the
    genotype's normalized coordinates."""
    return sum(_density(n, params) for n in normalize(space, genotype))


class GaussianSumFitness:
    """Surrogate provider with per-dimension contributions precomputed.

    Evaluation reduces to one table lookup per gene, which keeps the
    thousand-repetition sweeps cheap.
    """

    kind = "surrogate"

    def __init__(self, space: ParameterSpace, params: SurrogateParams):
        self.space = space
        self.params = params
        self._tables = []
        for dim in space.dimensions:
            self._tables.append(tuple(
                _density((v - dim.minimum) / dim.span, params) for v in dim.values))

    def evaluate(self, genotype: Genotype) -> float:
        return sum(table[i] for table, i in zip(self._tables, genotype.indices))

    def descriptor(self) -> dict:
        return {"kind": self.kind, "sigma": self.params.sigma,
                "peak_fraction": self.params.peak_fraction}


class ExternalFitness:
    """Measured-in-the-lab fitness: values are recorded, never computed.

    The session service feeds measured speeds straight to the engines; this
    provider exists for code paths that want the provider contract, replaying
    recorded speeds by genotype.
    """

    kind = "external"

    def __init__(self, label: str = "measured speed, cm/min"):
        self.label = label
        self._recorded: dict[Genotype, float] = {}

    def record(self, genotype: Genotype, value: float) -> None:
        self._recorded[genotype] = value

    def evaluate(self, genotype: Genotype) -> float:
        try:
            return self._recorded[genotype]
        except KeyError:
            raise LookupError("genotype has no recorded measurement") from None

    def descriptor(self) -> dict:
        return {"kind": self.kind, "label": self.label}


def argmax_oracle(space: ParameterSpace,
                  params: SurrogateParams) -> tuple[Genotype, float]:
    """Exact surrogate maximizer by independent per-dimension maximization.

    The sum is separable, so the best genotype picks, per dimension, the
    value with the largest density contribution (ties toward the lower
    index).
    """
    indices = []
    total = 0.0
    for dim in space.dimensions:
        best_i, best_c = 0, -math.inf
        for i, v in enumerate(dim.values):
            c = _density((v - dim.minimum) / dim.span, params)
            if c > best_c:
                best_i, best_c = i, c
        indices.append(best_i)
        total += best_c
    return Genotype(tuple(indices)), total
