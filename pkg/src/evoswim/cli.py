"""Operator CLI: inspect the space, run trials and sweeps, serve sessions.

Exit codes: 0 success, 1 environment/runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .ga import GaConfig
from .genome import build_default_space, load_space, space_to_dict
from .pso import PsoConfig
from .session import SessionStore
from .sweep import SweepSpec, TrialSpec, cells_to_csv, load_sweep_spec, run_sweep, run_trial


class UsageError(Exception):
    pass


def _env(name: str, fallback: str | None = None) -> str | None:
    return os.environ.get(name, fallback)


# -- space -----------------------------------------------------------------

def cmd_space(args: argparse.Namespace) -> int:
    if args.file:
        try:
            space = load_space(args.file)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"malformed space file {args.file}: {exc}") from exc
    else:
        space = build_default_space()
    if args.json:
        print(json.dumps(space_to_dict(space), indent=2))
        return 0
    for i, dim in enumerate(space.dimensions, start=1):
        values = ", ".join(format(v, "g") for v in dim.values)
        unit = f" {dim.unit}" if dim.unit else ""
        tail = f" (periodic, period {format(dim.period, 'g')}{unit})" if dim.periodic else ""
        print(f"{i}. {dim.name}: {values}{unit}{tail}")
    print(f"cardinality: {space.cardinality()}")
    return 0


# -- trial -----------------------------------------------------------------

def _config_from_flags(args: argparse.Namespace):
    ga_flags = [args.selection, args.pool, args.rate, args.m_min, args.m_max]
    pso_flags = [args.w, args.c1, args.c2]
    if args.algo == "ga":
        if any(v is not None for v in pso_flags):
            raise UsageError("--w/--c1/--c2 are PSO flags; the algorithm is ga")
        if args.adaptive:
            if args.rate is not None:
                raise UsageError("--rate is for constant-rate runs; use --m-min/--m-max with --adaptive")
            if args.m_min is None or args.m_max is None:
                raise UsageError("--adaptive needs --m-min and --m-max")
            m_min, m_max = args.m_min, args.m_max
        else:
            if args.m_min is not None or args.m_max is not None:
                raise UsageError("--m-min/--m-max need --adaptive (use --rate for a constant rate)")
            m_min = m_max = args.rate if args.rate is not None else 1.0
        try:
            return GaConfig(selection=args.selection or "rank",
                            pool=args.pool or "elite8",
                            m_min=m_min, m_max=m_max, adaptive=args.adaptive)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    if any(v is not None for v in [args.selection, args.pool, args.rate, args.m_min, args.m_max]) or args.adaptive:
        raise UsageError("GA flags given but the algorithm is pso")
    try:
        return PsoConfig(w=args.w if args.w is not None else 0.0,
                         c1=args.c1 if args.c1 is not None else 0.2,
                         c2=args.c2 if args.c2 is not None else 1.4)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_trial(args: argparse.Namespace) -> int:
    config = _config_from_flags(args)
    try:
        spec = TrialSpec(algorithm=args.algo, config=config, sigma=args.sigma,
                         seed=args.seed, iterations=args.iterations)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    space = build_default_space()
    result = run_trial(spec, space=space)
    print("generation\tbest_fitness\tbest_genotype")
    for generation, (best, genotype) in enumerate(
            zip(result.per_generation_best, result.per_generation_best_genotype)):
        values = ",".join(format(v, "g") for v in space.values_of(genotype))
        print(f"{generation}\t{format(best, '.9g')}\t{values}")
    return 0


# -- sweep -----------------------------------------------------------------

def _parse_grid_value(text: str):
    if text in ("true", "false"):
        return text == "true"
    try:
        return float(text)
    except ValueError:
        return text


def _spec_from_args(args: argparse.Namespace) -> SweepSpec:
    if args.spec:
        if args.algo or args.sigma or args.grid:
            raise UsageError("--spec cannot be combined with inline --algo/--sigma/--grid")
        spec = load_sweep_spec(args.spec)
    else:
        if not args.algo or not args.sigma:
            raise UsageError("inline sweeps need --algo and at least one --sigma")
        grid = []
        for item in args.grid or []:
            if "=" not in item:
                raise UsageError(f"--grid expects name=v1,v2,... got {item!r}")
            name, _, values = item.partition("=")
            grid.append((name, tuple(_parse_grid_value(v) for v in values.split(","))))
        spec = SweepSpec(algorithm=args.algo, sigmas=tuple(args.sigma),
                         grid=tuple(grid), repetitions=args.reps or 1000,
                         base_seed=args.seed, iterations=args.iterations)
    if args.reps is not None:
        spec = SweepSpec(algorithm=spec.algorithm, sigmas=spec.sigmas, grid=spec.grid,
                         repetitions=args.reps, base_seed=spec.base_seed,
                         iterations=spec.iterations, base_config=spec.base_config)
    return spec


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.reps is not None and args.reps < 1:
        raise UsageError("--reps must be >= 1")
    if args.parallel < 1:
        raise UsageError("--parallel must be >= 1")
    try:
        spec = _spec_from_args(args)
    except (ValueError, OSError) as exc:
        raise UsageError(str(exc)) from exc

    def progress(done: int, total: int) -> None:
        print(f"cell {done}/{total}", file=sys.stderr, flush=True)

    cells = run_sweep(spec, parallel=args.parallel, progress=progress)
    if args.out == "-":
        cells_to_csv(cells, sys.stdout)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            cells_to_csv(cells, fh)
    return 0


# -- serve -----------------------------------------------------------------

def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app

    port = args.port if args.port is not None else int(_env("EVOSWIM_PORT", "8000"))
    journal_dir = args.journal_dir or _env("EVOSWIM_JOURNAL_DIR", "journals")
    assets_dir = args.assets_dir or _env("EVOSWIM_ASSETS_DIR")
    if assets_dir is not None and not Path(assets_dir).is_dir():
        raise UsageError(f"assets directory {assets_dir} does not exist")
    store = SessionStore(journal_dir)
    app = create_app(store, assets_dir=assets_dir)
    try:
        uvicorn.run(app, host=args.host, port=port, log_level="warning")
    except SystemExit as exc:  # uvicorn converts startup failures (busy port)
        return 1 if exc.code else 0
    finally:
        store.close()
    return 0


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evoswim",
        description="GA/PSO optimization toolkit for light-powered swimming robots")
    sub = parser.add_subparsers(dest="command", required=True)

    p_space = sub.add_parser("space", help="print the parameter space")
    p_space.add_argument("--file", help="load a space from a JSON document")
    p_space.add_argument("--json", action="store_true", help="machine-readable output")
    p_space.set_defaults(func=cmd_space)

    p_trial = sub.add_parser("trial", help="run one surrogate optimization trial")
    p_trial.add_argument("--algo", choices=("ga", "pso"), required=True)
    p_trial.add_argument("--sigma", type=float, default=0.25)
    p_trial.add_argument("--seed", type=int, default=0)
    p_trial.add_argument("--iterations", type=int, default=5)
    p_trial.add_argument("--selection", choices=("rank", "roulette"))
    p_trial.add_argument("--pool", choices=("elite8", "all_history"))
    p_trial.add_argument("--rate", type=float, help="constant GA mutation rate")
    p_trial.add_argument("--m-min", dest="m_min", type=float)
    p_trial.add_argument("--m-max", dest="m_max", type=float)
    p_trial.add_argument("--adaptive", action="store_true")
    p_trial.add_argument("--w", type=float)
    p_trial.add_argument("--c1", type=float)
    p_trial.add_argument("--c2", type=float)
    p_trial.set_defaults(func=cmd_trial)

    p_sweep = sub.add_parser("sweep", help="run an algorithm-parameter sweep")
    p_sweep.add_argument("--spec", help="sweep spec JSON document")
    p_sweep.add_argument("--algo", choices=("ga", "pso"))
    p_sweep.add_argument("--sigma", type=float, action="append")
    p_sweep.add_argument("--grid", action="append",
                         help="grid parameter, e.g. --grid c2=0,0.2,0.4")
    p_sweep.add_argument("--reps", type=int)
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--iterations", type=int, default=5)
    p_sweep.add_argument("--out", required=True, help="CSV path, or - for stdout")
    p_sweep.add_argument("--parallel", type=int, default=1)
    p_sweep.set_defaults(func=cmd_sweep)

    p_serve = sub.add_parser("serve", help="run the session service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int)
    p_serve.add_argument("--journal-dir", dest="journal_dir")
    p_serve.add_argument("--assets-dir", dest="assets_dir")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 1
    except (OSError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
