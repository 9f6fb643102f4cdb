"""Simulation study harness: seeded trials, parameter sweeps, CSV output.

A trial is one five-iteration optimization (1 random generation + 4
optimized) against the Gaussian-sum surrogate; a sweep runs many independent
repetitions per algorithm-parameter cell and aggregates the per-trial best
fitness. Per-trial seeds are derived with :func:`evoswim.seeds.derive_seed`
from (base_seed, sigma index, cell index, repetition index), and per-cell
aggregation always runs in repetition order, so results are bitwise identical
at any parallelism.

The engine rng inside a trial is a single ``random.Random(seed)`` stream
consumed in the draw order documented in :mod:`evoswim.ga` / :mod:`evoswim.pso`.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
import math
import random
import statistics
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence, TextIO

from .engines import ALGORITHMS, EngineConfig, config_from_dict, default_config, make_engine
from .fitness import FitnessProvider, GaussianSumFitness, SurrogateParams
from .genome import Genotype, ParameterSpace, build_default_space
from .seeds import derive_seed

_GA_GRID_FIELDS = {"selection", "pool", "m_min", "m_max", "adaptive", "rate"}
_PSO_GRID_FIELDS = {"w", "c1", "c2"}


@dataclass(frozen=True)
class TrialSpec:
    """One seeded optimization run against the surrogate."""

    algorithm: str
    config: EngineConfig
    sigma: float
    seed: int
    iterations: int = 5
    population: int = 8

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        config_pop = getattr(self.config, "population", None) or getattr(self.config, "swarm")
        if self.population != config_pop:
            raise ValueError("population must match the engine config")


@dataclass(frozen=True)
class TrialResult:
    best_fitness: float
    best_genotype: Genotype
    per_generation_best: tuple[float, ...]
    per_generation_best_genotype: tuple[Genotype, ...]


def run_trial(spec: TrialSpec, space: ParameterSpace | None = None,
              provider: FitnessProvider | None = None) -> TrialResult:
    """Run one trial; the best is taken over all iterations x population evaluations."""
    if space is None:
        space = build_default_space()
    if provider is None:
        provider = GaussianSumFitness(space, SurrogateParams(spec.sigma))
    rng = random.Random(spec.seed)
    engine = make_engine(spec.algorithm, space, spec.config, rng)
    best = -math.inf
    best_genotype: Genotype | None = None
    running_best: list[float] = []
    running_genotype: list[Genotype] = []
    for _ in range(spec.iterations):
        genotypes = engine.ask()
        fitnesses = [provider.evaluate(g) for g in genotypes]
        engine.tell(fitnesses)
        for g, f in zip(genotypes, fitnesses):
            if f > best:
                best, best_genotype = f, g
        running_best.append(best)
        running_genotype.append(best_genotype)  # type: ignore[arg-type]
    assert best_genotype is not None
    return TrialResult(best, best_genotype, tuple(running_best), tuple(running_genotype))


@dataclass(frozen=True)
class SweepSpec:
    """A grid of algorithm-parameter cells, each run ``repetitions`` times per sigma."""

    algorithm: str
    sigmas: tuple[float, ...]
    grid: tuple[tuple[str, tuple], ...] = ()
    repetitions: int = 1000
    base_seed: int = 0
    iterations: int = 5
    base_config: EngineConfig | None = None

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if not self.sigmas:
            raise ValueError("at least one sigma is required")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        allowed = _GA_GRID_FIELDS if self.algorithm == "ga" else _PSO_GRID_FIELDS
        names = [name for name, _ in self.grid]
        unknown = set(names) - allowed
        if unknown:
            raise ValueError(f"unknown grid parameters: {', '.join(sorted(unknown))}")
        if len(set(names)) != len(names):
            raise ValueError("duplicate grid parameters")
        if "rate" in names and ({"m_min", "m_max", "adaptive"} & set(names)):
            raise ValueError("'rate' cannot be combined with m_min/m_max/adaptive")

    def config_cells(self) -> list[EngineConfig]:
        """Expand the grid into configs, skipping cells with m_max < m_min."""
        base = self.base_config or default_config(self.algorithm)
        if not self.grid:
            return [base]
        names = [name for name, _ in self.grid]
        cells = []
        for combo in itertools.product(*(values for _, values in self.grid)):
            overrides = dict(zip(names, combo))
            rate = overrides.pop("rate", None)
            if rate is not None:
                overrides.update(m_min=rate, m_max=rate, adaptive=False)
            m_min = overrides.get("m_min", getattr(base, "m_min", None))
            m_max = overrides.get("m_max", getattr(base, "m_max", None))
            if m_min is not None and m_max is not None and m_max < m_min:
                continue
            cells.append(dataclasses.replace(base, **overrides))
        return cells


@dataclass(frozen=True)
class SweepCell:
    sigma: float
    algorithm: str
    config: EngineConfig
    mean_best: float
    std_best: float
    repetitions: int
    normalized_mean: float | None = None


def _population_of(config: EngineConfig) -> int:
    return getattr(config, "population", None) or getattr(config, "swarm")


def _cell_payload(spec: SweepSpec, space: ParameterSpace,
                  sigma_idx: int, cell_idx: int, config: EngineConfig) -> tuple:
    return (space, spec.algorithm, config, spec.sigmas[sigma_idx], spec.iterations,
            spec.base_seed, sigma_idx, cell_idx, spec.repetitions)


def _run_cell(payload: tuple) -> tuple[int, int, float, float]:
    (space, algorithm, config, sigma, iterations,
     base_seed, sigma_idx, cell_idx, repetitions) = payload
    provider = GaussianSumFitness(space, SurrogateParams(sigma))
    population = _population_of(config)
    bests = []
    for rep in range(repetitions):
        seed = derive_seed(base_seed, sigma_idx, cell_idx, rep)
        trial = TrialSpec(algorithm=algorithm, config=config, sigma=sigma,
                          seed=seed, iterations=iterations, population=population)
        bests.append(run_trial(trial, space=space, provider=provider).best_fitness)
    mean = statistics.fmean(bests)
    std = statistics.stdev(bests) if len(bests) >= 2 else 0.0
    return sigma_idx, cell_idx, mean, std


def run_sweep(spec: SweepSpec, space: ParameterSpace | None = None,
              parallel: int = 1,
              progress: Callable[[int, int], None] | None = None) -> list[SweepCell]:
    """Run every (sigma, cell) and return cells with within-sigma normalization.

    ``parallel`` > 1 distributes whole cells over a process pool; results are
    keyed and reassembled in grid order, so output is independent of the
    worker count.
    """
    if space is None:
        space = build_default_space()
    configs = spec.config_cells()
    payloads = [
        _cell_payload(spec, space, s_idx, c_idx, config)
        for s_idx in range(len(spec.sigmas))
        for c_idx, config in enumerate(configs)
    ]
    stats: dict[tuple[int, int], tuple[float, float]] = {}
    done = 0
    if parallel <= 1:
        for payload in payloads:
            s_idx, c_idx, mean, std = _run_cell(payload)
            stats[(s_idx, c_idx)] = (mean, std)
            done += 1
            if progress:
                progress(done, len(payloads))
    else:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            futures = [pool.submit(_run_cell, payload) for payload in payloads]
            for future in as_completed(futures):
                s_idx, c_idx, mean, std = future.result()
                stats[(s_idx, c_idx)] = (mean, std)
                done += 1
                if progress:
                    progress(done, len(payloads))

    cells = []
    for s_idx, sigma in enumerate(spec.sigmas):
        group = []
        for c_idx, config in enumerate(configs):
            mean, std = stats[(s_idx, c_idx)]
            group.append(SweepCell(sigma=sigma, algorithm=spec.algorithm, config=config,
                                   mean_best=mean, std_best=std,
                                   repetitions=spec.repetitions))
        cells.extend(normalize_within_sigma(group))
    return cells


def normalize_within_sigma(cells: Sequence[SweepCell]) -> list[SweepCell]:
    """Divide each mean by the best mean in the (single-sigma) group."""
    if not cells:
        raise ValueError("cannot normalize an empty cell group")
    sigmas = {c.sigma for c in cells}
    if len(sigmas) != 1:
        raise ValueError("cells must share one sigma")
    top = max(c.mean_best for c in cells)
    return [
        dataclasses.replace(c, normalized_mean=(c.mean_best / top if top > 0 else 1.0))
        for c in cells
    ]


def z_statistic(a: SweepCell, b: SweepCell) -> float:
    """Two-sample z statistic for mean_best(a) - mean_best(b)."""
    diff = a.mean_best - b.mean_best
    denom = math.sqrt(a.std_best ** 2 / a.repetitions + b.std_best ** 2 / b.repetitions)
    if denom == 0:
        return math.copysign(math.inf, diff) if diff else 0.0
    return diff / denom


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def cells_to_csv(cells: Sequence[SweepCell], out: TextIO) -> None:
    """Fixed-order CSV: sigma,algorithm,<config fields...>,mean_best,std_best,normalized_mean,repetitions."""
    if not cells:
        raise ValueError("no cells to write")
    algorithms = {c.algorithm for c in cells}
    if len(algorithms) != 1:
        raise ValueError("cells must share one algorithm")
    config_fields = [f.name for f in dataclasses.fields(cells[0].config)]
    header = ["sigma", "algorithm", *config_fields,
              "mean_best", "std_best", "normalized_mean", "repetitions"]
    out.write(",".join(header) + "\n")
    for cell in cells:
        row = [_format_value(cell.sigma), cell.algorithm]
        row += [_format_value(getattr(cell.config, name)) for name in config_fields]
        row += [_format_value(cell.mean_best), _format_value(cell.std_best),
                _format_value(cell.normalized_mean if cell.normalized_mean is not None else ""),
                str(cell.repetitions)]
        out.write(",".join(row) + "\n")


def sweep_spec_from_dict(doc: dict) -> SweepSpec:
    """Parse the human-editable sweep document (see README for the format)."""
    known = {"algorithm", "sigmas", "grid", "repetitions", "base_seed",
             "iterations", "config"}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown sweep spec keys: {', '.join(sorted(unknown))}")
    algorithm = doc.get("algorithm")
    if algorithm not in ALGORITHMS:
        raise ValueError(f"algorithm must be one of {ALGORITHMS}")
    sigmas = tuple(float(s) for s in doc.get("sigmas", ()))
    grid_doc = doc.get("grid", {})
    grid = tuple(
        (name, tuple(values)) for name, values in grid_doc.items()
    )
    base_config = config_from_dict(algorithm, doc.get("config")) if "config" in doc \
        else None
    return SweepSpec(
        algorithm=algorithm,
        sigmas=sigmas,
        grid=grid,
        repetitions=int(doc.get("repetitions", 1000)),
        base_seed=int(doc.get("base_seed", 0)),
        iterations=int(doc.get("iterations", 5)),
        base_config=base_config,
    )


def load_sweep_spec(path: str | Path) -> SweepSpec:
    with open(path, encoding="utf-8") as fh:
        return sweep_spec_from_dict(json.load(fh))
