"""Quantized robot/actuation parameter grid and genotype operations.

A genotype is stored as a vector of value *indices*, one per dimension, so
equality, mutation and journaling stay exact (no float comparisons). Raw
values are derived on demand via :meth:`ParameterSpace.values_of`.
"""

from __future__ import annotations

import json
import random
from bisect import bisect_left
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence


class SpaceExhaustedError(RuntimeError):
    """Every genotype in the space has already been evaluated."""


@dataclass(frozen=True)
class DimensionSpec:
    """One quantized dimension: an ordered list of allowed values.

    ``values`` must be strictly increasing. Periodic dimensions (the
    polarization angle) additionally carry the period of their circle and
    every value must lie in ``[0, period)``.
    """

    name: str
    unit: str
    values: tuple[float, ...]
    periodic: bool = False
    period: float | None = None

    def __post_init__(self) -> None:
        if len(self.values) < 2:
            raise ValueError(f"dimension {self.name!r} needs at least 2 values")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError(f"dimension {self.name!r} values must be strictly increasing")
        if self.periodic:
            if self.period is None or self.period <= 0:
                raise ValueError(f"periodic dimension {self.name!r} needs a positive period")
            if any(v < 0 or v >= self.period for v in self.values):
                raise ValueError(f"dimension {self.name!r} values must lie in [0, period)")
        elif self.period is not None:
            raise ValueError(f"dimension {self.name!r} is not periodic but has a period")

    @property
    def count(self) -> int:
        return len(self.values)

    @property
    def minimum(self) -> float:
        return self.values[0]

    @property
    def maximum(self) -> float:
        return self.values[-1]

    @property
    def span(self) -> float:
        """Full value range max - min (the PSO clamp/reset radius)."""
        return self.values[-1] - self.values[0]


@dataclass(frozen=True)
class ParameterSpace:
    """An ordered product of quantized dimensions."""

    dimensions: tuple[DimensionSpec, ...]

    def __post_init__(self) -> None:
        if not self.dimensions:
            raise ValueError("a parameter space needs at least one dimension")
        names = [d.name for d in self.dimensions]
        if len(set(names)) != len(names):
            raise ValueError("dimension names must be unique")

    def cardinality(self) -> int:
        """Number of distinct genotypes (product of per-dimension counts)."""
        total = 1
        for dim in self.dimensions:
            total *= dim.count
        return total

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.dimensions)

    def values_of(self, genotype: Genotype) -> tuple[float, ...]:
        """Raw values selected by a genotype, in dimension order."""
        return tuple(dim.values[i] for dim, i in zip(self.dimensions, genotype.indices))

    def validate_genotype(self, genotype: Genotype) -> None:
        if len(genotype.indices) != len(self.dimensions):
            raise ValueError("genotype length does not match the space")
        for dim, i in zip(self.dimensions, genotype.indices):
            if not 0 <= i < dim.count:
                raise ValueError(f"index {i} out of range for dimension {dim.name!r}")


@dataclass(frozen=True)
class Genotype:
    """One point of the grid as per-dimension value indices."""

    indices: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class EvaluatedIndividual:
    """A genotype with its measured or simulated fitness and provenance."""

    id: int
    genotype: Genotype
    fitness: float
    generation: int


def build_default_space() -> ParameterSpace:
    """The 8-dimension robot/actuation grid with 345,600 combinations."""
    return ParameterSpace(dimensions=(
        DimensionSpec("laser_power", "W",
                      (0.4, 0.8, 1.2, 1.6, 2.0, 2.4, 2.8, 3.2)),
        DimensionSpec("scan_frequency", "Hz",
                      tuple(round(0.1 * i, 1) for i in range(1, 51))),
        DimensionSpec("polarization_angle", "deg",
                      tuple(float(15 * i) for i in range(12)),
                      periodic=True, period=180.0),
        DimensionSpec("thickness", "um", (50.0, 90.0)),
        DimensionSpec("length", "mm", (6.0, 12.0, 18.0)),
        DimensionSpec("curl_length", "mm", (1.0, 2.0, 3.0)),
        DimensionSpec("tail_direction", "", (0.0, 1.0)),
        DimensionSpec("dye_concentration", "mol%", (0.2, 1.0)),
    ))


def random_genotype(space: ParameterSpace, rng: random.Random) -> Genotype:
    """Uniform independent draw of one index per dimension."""
    return Genotype(tuple(rng.randrange(dim.count) for dim in space.dimensions))


def random_distinct_genotypes(space: ParameterSpace, count: int,
                              rng: random.Random) -> list[Genotype]:
    """``count`` pairwise-distinct uniform genotypes (redraw on collision)."""
    if count > space.cardinality():
        raise SpaceExhaustedError(
            f"cannot draw {count} distinct genotypes from a space of {space.cardinality()}")
    seen: set[Genotype] = set()
    out: list[Genotype] = []
    while len(out) < count:
        g = random_genotype(space, rng)
        if g not in seen:
            seen.add(g)
            out.append(g)
    return out


def normalize(space: ParameterSpace, genotype: Genotype) -> tuple[float, ...]:
    """Map a genotype to [0,1]^n: (value - min) / (max - min) per dimension.

    Periodicity is deliberately ignored here; the surrogate fitness treats
    every dimension as a plain range.
    """
    return tuple(
        (dim.values[i] - dim.minimum) / dim.span
        for dim, i in zip(space.dimensions, genotype.indices)
    )


def _nearest_index(dim: DimensionSpec, x: float) -> int:
    if dim.periodic:
        assert dim.period is not None
        best, best_dist = 0, float("inf")
        for i, v in enumerate(dim.values):
            r = (x - v) % dim.period
            dist = min(r, dim.period - r)
            if dist < best_dist:  # strict: ties keep the lower index
                best, best_dist = i, dist
        return best
    j = bisect_left(dim.values, x)
    if j == 0:
        return 0
    if j >= dim.count:
        return dim.count - 1
    # <= resolves exact-midpoint ties to the lower index
    return j - 1 if x - dim.values[j - 1] <= dim.values[j] - x else j


def quantize(space: ParameterSpace, x: Sequence[float]) -> Genotype:
    """Snap a raw-unit vector onto the grid.

    Non-periodic dimensions use plain nearest-value distance; periodic ones
    measure distance on the circle of their period. Ties break toward the
    lower index.
    """
    if len(x) != len(space.dimensions):
        raise ValueError("vector length does not match the space")
    return Genotype(tuple(
        _nearest_index(dim, float(v)) for dim, v in zip(space.dimensions, x)
    ))


def mutate_gene(space: ParameterSpace, genotype: Genotype, d: int,
                rng: random.Random) -> Genotype:
    """Replace gene ``d`` with a uniformly random *different* allowed index."""
    dim = space.dimensions[d]
    current = genotype.indices[d]
    new = rng.randrange(dim.count - 1)
    if new >= current:
        new += 1
    indices = list(genotype.indices)
    indices[d] = new
    return Genotype(tuple(indices))


def mutate_random_gene(space: ParameterSpace, genotype: Genotype,
                       rng: random.Random) -> Genotype:
    """Single random gene mutation: uniform dimension, then a different value."""
    return mutate_gene(space, genotype, rng.randrange(len(space.dimensions)), rng)


def space_to_dict(space: ParameterSpace) -> dict:
    dims = []
    for dim in space.dimensions:
        doc: dict = {"name": dim.name, "unit": dim.unit, "values": list(dim.values)}
        if dim.periodic:
            doc["periodic"] = True
            doc["period"] = dim.period
        dims.append(doc)
    return {"dimensions": dims}


def space_from_dict(doc: dict) -> ParameterSpace:
    try:
        dims = doc["dimensions"]
    except (TypeError, KeyError):
        raise ValueError("space document needs a 'dimensions' list") from None
    specs = []
    for entry in dims:
        unknown = set(entry) - {"name", "unit", "values", "periodic", "period"}
        if unknown:
            raise ValueError(f"unknown dimension fields: {sorted(unknown)}")
        specs.append(DimensionSpec(
            name=entry["name"],
            unit=entry.get("unit", ""),
            values=tuple(float(v) for v in entry["values"]),
            periodic=bool(entry.get("periodic", False)),
            period=float(entry["period"]) if entry.get("periodic", False) else None,
        ))
    return ParameterSpace(dimensions=tuple(specs))


def load_space(path: str | Path) -> ParameterSpace:
    """Read a space from a human-editable JSON document."""
    with open(path, encoding="utf-8") as fh:
        return space_from_dict(json.load(fh))


def save_space(space: ParameterSpace, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(space_to_dict(space), fh, indent=2)
        fh.write("\n")
