"""Lab-in-the-loop optimization sessions, recoverable from an append-only journal.

A session drives one engine through the race workflow: propose a generation
of robots, collect operator-entered speed measurements, advance. Every state
change is journaled as one JSON line; replaying the journal (re-deriving rng
draws from the seed and event order) reconstructs the exact live state,
which is verified against the journaled genotypes during replay.
"""

from __future__ import annotations

import json
import logging
import math
import os
import random
import statistics
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from .engines import Engine, EngineConfig, config_from_dict, config_to_dict, make_engine
from .genome import Genotype, ParameterSpace, build_default_space, space_from_dict, space_to_dict

EVENT_KINDS = ("session_created", "generation_proposed", "measurement_recorded",
               "generation_completed", "session_completed")

logger = logging.getLogger(__name__)


class SessionError(RuntimeError):
    """Base for state-machine violations; ``code`` is the wire error code."""

    code = "session_error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


class StateConflictError(SessionError):
    code = "state_conflict"


class IncompleteGenerationError(SessionError):
    code = "incomplete_generation"


class DuplicateMeasurementError(SessionError):
    code = "duplicate_measurement"


class MeasurementValidationError(SessionError):
    code = "invalid_measurement"


class RobotIndexError(SessionError):
    code = "robot_index_out_of_range"


class JournalError(RuntimeError):
    """The journal cannot be replayed (corruption, gap, or engine mismatch)."""


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def compute_speed(slopes_a: Sequence[float], slopes_b: Sequence[float]) -> float:
    """Robot speed: the larger of the two direction-wise |mean slope| values."""
    if not slopes_a or not slopes_b:
        raise MeasurementValidationError("each scan direction needs at least one slope")
    for v in (*slopes_a, *slopes_b):
        if not math.isfinite(v):
            raise MeasurementValidationError("slopes must be finite numbers")
    return max(abs(statistics.fmean(slopes_a)), abs(statistics.fmean(slopes_b)))


@dataclass(frozen=True)
class MeasurementRecord:
    robot_index: int
    slopes_dir_a: tuple[float, ...]
    slopes_dir_b: tuple[float, ...]
    speed: float
    entered_at: str


@dataclass(frozen=True)
class JournalEvent:
    seq: int
    kind: str
    at: str
    payload: dict


class JournalWriter:
    """Append-only, newline-delimited JSON events; fsync on generation boundaries."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        # guard against a pre-existing file missing its final newline
        if self.path.exists() and self.path.stat().st_size > 0:
            with open(self.path, "rb") as fh:
                fh.seek(-1, os.SEEK_END)
                needs_newline = fh.read(1) != b"\n"
        else:
            needs_newline = False
        self._fh = open(self.path, "a", encoding="utf-8")
        if needs_newline:
            self._fh.write("\n")
            self._fh.flush()

    def append(self, event: JournalEvent, fsync: bool = False) -> None:
        line = json.dumps({"seq": event.seq, "kind": event.kind, "at": event.at,
                           "payload": event.payload}, separators=(",", ":"))
        self._fh.write(line + "\n")
        self._fh.flush()
        if fsync:
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        self._fh.close()


def read_journal(path: str | Path) -> tuple[list[JournalEvent], str | None]:
    """Parse events until the first gap or corrupt line.

    Returns the valid prefix and an error description (None if the whole
    file parsed). ``valid_bytes`` of the prefix is recoverable via
    :func:`journal_valid_bytes`.
    """
    events: list[JournalEvent] = []
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            return events, f"blank line at {lineno}"
        try:
            doc = json.loads(line)
            event = JournalEvent(seq=int(doc["seq"]), kind=str(doc["kind"]),
                                 at=str(doc["at"]), payload=dict(doc["payload"]))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            return events, f"corrupt event at line {lineno}"
        if event.seq != len(events) + 1:
            return events, f"sequence gap at line {lineno} (expected {len(events) + 1}, got {event.seq})"
        if event.kind not in EVENT_KINDS:
            return events, f"unknown event kind at line {lineno}"
        events.append(event)
    return events, None


def truncate_journal(path: str | Path, events: Sequence[JournalEvent]) -> None:
    """Cut a journal back to the given valid prefix (used after crash recovery)."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines(keepends=True)
    keep = "".join(lines[: len(events)])
    if keep and not keep.endswith("\n"):
        keep += "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(keep)


class Session:
    """One optimization run: engine, proposals, measurements, journal."""

    def __init__(self, *, session_id: str, name: str, algorithm: str,
                 config: EngineConfig, space: ParameterSpace, seed: int,
                 max_generations: int = 5,
                 journal_writer: JournalWriter | None = None):
        if max_generations < 1:
            raise ValueError("max_generations must be >= 1")
        self.id = session_id
        self.name = name
        self.algorithm = algorithm
        self.config = config
        self.space = space
        self.seed = seed
        self.max_generations = max_generations
        self.engine: Engine = make_engine(algorithm, space, config, random.Random(seed))
        self.status = "collecting"
        self.proposals: list[list[Genotype]] = []
        self.measurements: list[dict[int, MeasurementRecord]] = []
        self.created_at: str | None = None
        self.recovery_error: str | None = None
        self._writer = journal_writer
        self._next_seq = 1

    # -- construction ------------------------------------------------------

    @classmethod
    def create(cls, *, name: str, algorithm: str, config: EngineConfig,
               seed: int, max_generations: int = 5,
               space: ParameterSpace | None = None,
               session_id: str | None = None,
               journal_writer: JournalWriter | None = None) -> "Session":
        session = cls(session_id=session_id or uuid.uuid4().hex, name=name,
                      algorithm=algorithm, config=config,
                      space=space if space is not None else build_default_space(),
                      seed=seed, max_generations=max_generations,
                      journal_writer=journal_writer)
        at = _now()
        session.created_at = at
        session._journal("session_created", {
            "session_id": session.id, "name": name, "algorithm": algorithm,
            "config": config_to_dict(config), "seed": seed,
            "max_generations": max_generations,
            "space": space_to_dict(session.space),
        }, at=at, fsync=True)
        session._propose_next(at=at)
        return session

    # -- derived state -----------------------------------------------------

    @property
    def population(self) -> int:
        return self.engine.population

    @property
    def current_generation(self) -> int:
        return len(self.proposals) - 1

    def current_measurements(self) -> dict[int, MeasurementRecord]:
        return self.measurements[self.current_generation]

    def missing_robots(self) -> list[int]:
        done = self.current_measurements()
        return [i for i in range(self.population) if i not in done]

    def generation_complete(self, generation: int) -> bool:
        return len(self.measurements[generation]) == self.population

    def best_of_generation(self, generation: int) -> int | None:
        """Robot index with the maximum speed; ties go to the lowest index."""
        if not self.generation_complete(generation):
            return None
        records = self.measurements[generation]
        return min(records, key=lambda i: (-records[i].speed, i))

    # -- journaling --------------------------------------------------------

    def _journal(self, kind: str, payload: dict, at: str, fsync: bool = False) -> None:
        event = JournalEvent(seq=self._next_seq, kind=kind, at=at, payload=payload)
        self._next_seq += 1
        if self._writer is not None:
            self._writer.append(event, fsync=fsync)

    def attach_writer(self, writer: JournalWriter) -> None:
        self._writer = writer

    # -- state transitions -------------------------------------------------

    def _propose_next(self, at: str, expected: list[list[int]] | None = None) -> None:
        genotypes = self.engine.ask()
        indices = [list(g.indices) for g in genotypes]
        if expected is not None and indices != expected:
            raise JournalError("journaled generation does not match engine replay")
        self.proposals.append(genotypes)
        self.measurements.append({})
        self._journal("generation_proposed",
                      {"generation": self.current_generation, "genotypes": indices},
                      at=at, fsync=True)

    def record_measurement(self, robot_index: int,
                           slopes_a: Sequence[float] | None = None,
                           slopes_b: Sequence[float] | None = None,
                           speed: float | None = None,
                           overwrite: bool = False) -> MeasurementRecord:
        """Store one robot's race result: 5+5 slope sets or a direct speed."""
        if self.status != "collecting":
            raise StateConflictError("session is complete; no measurements accepted")
        if not 0 <= robot_index < self.population:
            raise RobotIndexError(
                f"robot index must lie in [0, {self.population})", robot_index=robot_index)
        if robot_index in self.current_measurements() and not overwrite:
            raise DuplicateMeasurementError(
                f"robot {robot_index} already measured (pass overwrite to replace)")
        if slopes_a is not None or slopes_b is not None:
            if speed is not None:
                raise MeasurementValidationError("give slopes or a direct speed, not both")
            computed = compute_speed(slopes_a or (), slopes_b or ())
            slopes_a = tuple(float(v) for v in slopes_a or ())
            slopes_b = tuple(float(v) for v in slopes_b or ())
        else:
            if speed is None:
                raise MeasurementValidationError("a measurement needs slopes or a direct speed")
            if not math.isfinite(speed) or speed < 0:
                raise MeasurementValidationError("direct speed must be finite and >= 0")
            computed = float(speed)
            slopes_a = ()
            slopes_b = ()
        at = _now()
        record = self._apply_measurement({
            "generation": self.current_generation, "robot_index": robot_index,
            "slopes_dir_a": list(slopes_a), "slopes_dir_b": list(slopes_b),
            "speed": computed, "overwrite": overwrite,
        }, at=at)
        return record

    def _apply_measurement(self, payload: dict, at: str) -> MeasurementRecord:
        record = MeasurementRecord(
            robot_index=payload["robot_index"],
            slopes_dir_a=tuple(payload["slopes_dir_a"]),
            slopes_dir_b=tuple(payload["slopes_dir_b"]),
            speed=payload["speed"],
            entered_at=at,
        )
        self.measurements[payload["generation"]][record.robot_index] = record
        self._journal("measurement_recorded", payload, at=at)
        return record

    def advance(self) -> None:
        """Feed the measured speeds to the engine and propose the next generation.

        Completes the session after ``max_generations`` generations; calling
        advance again afterwards is a state conflict.
        """
        if self.status != "collecting":
            raise StateConflictError("session is already complete")
        missing = self.missing_robots()
        if missing:
            raise IncompleteGenerationError(
                f"generation {self.current_generation} incomplete: "
                f"{len(missing)} robots unmeasured", missing=missing)
        records = self.current_measurements()
        speeds = [records[i].speed for i in range(self.population)]
        at = _now()
        generation = self.current_generation
        self.engine.tell(speeds)
        self._journal("generation_completed",
                      {"generation": generation, "speeds": speeds}, at=at, fsync=True)
        if len(self.proposals) < self.max_generations:
            self._propose_next(at=at)
        else:
            self.status = "complete"
            self._journal("session_completed",
                          {"generations": len(self.proposals)}, at=at, fsync=True)

    # -- replay ------------------------------------------------------------

    def _replay(self, event: JournalEvent) -> None:
        if event.kind == "generation_proposed":
            self._propose_next(at=event.at, expected=event.payload["genotypes"])
        elif event.kind == "measurement_recorded":
            self._apply_measurement(event.payload, at=event.at)
        elif event.kind == "generation_completed":
            self.engine.tell(event.payload["speeds"])
        elif event.kind == "session_completed":
            self.status = "complete"
        else:
            raise JournalError(f"unexpected event kind {event.kind!r}")

    def snapshot(self) -> tuple:
        """Deep, comparable state (engine rng included) for replay-equality checks."""
        return (
            self.id, self.name, self.algorithm, config_to_dict(self.config),
            self.seed, self.max_generations, self.status,
            tuple(tuple(g.indices for g in gen) for gen in self.proposals),
            tuple(tuple(sorted(m.items())) for m in self.measurements),
            self.engine.snapshot(),
        )


def recover(path: str | Path) -> Session:
    """Rebuild a session by replaying its journal.

    Replay halts at the first gap or corrupt event; the returned session
    reflects the valid prefix and carries the problem in
    ``session.recovery_error``. Journaled generations are checked against the
    re-derived engine output; a mismatch raises :class:`JournalError`.
    """
    events, error = read_journal(path)
    if not events:
        raise JournalError(f"journal {path} has no valid events")
    created = events[0]
    if created.kind != "session_created":
        raise JournalError("journal does not start with session_created")
    payload = created.payload
    session = Session(
        session_id=payload["session_id"], name=payload["name"],
        algorithm=payload["algorithm"],
        config=config_from_dict(payload["algorithm"], payload["config"]),
        space=space_from_dict(payload["space"]),
        seed=payload["seed"], max_generations=payload["max_generations"],
    )
    session.created_at = created.at
    session._next_seq = 2
    for event in events[1:]:
        session._replay(event)
    session._next_seq = len(events) + 1
    session.recovery_error = error
    return session


def export_csv(session: Session) -> str:
    """One row per robot per generation, with raw parameter values.

    The speed column is empty for robots not yet measured;
    ``is_generation_best`` marks the fastest row of each fully measured
    generation (ties to the lowest robot index).
    """
    names = session.space.names
    lines = [",".join(["generation", "robot_index", *names, "speed", "is_generation_best"])]
    for generation, genotypes in enumerate(session.proposals):
        records = session.measurements[generation]
        best = session.best_of_generation(generation)
        for idx, genotype in enumerate(genotypes):
            values = [format(v, "g") for v in session.space.values_of(genotype)]
            record = records.get(idx)
            speed = format(record.speed, ".9g") if record is not None else ""
            flag = "true" if best is not None and idx == best else "false"
            lines.append(",".join([str(generation), str(idx), *values, speed, flag]))
    return "\n".join(lines) + "\n"


def export(session: Session, format: str = "csv") -> str:
    if format != "csv":
        raise ValueError(f"unknown format {format!r}")
    return export_csv(session)


class SessionStore:
    """All sessions under one journal directory; one file per session.

    Writes to a session are serialized by its lock; reads under the same lock
    observe a journal-consistent snapshot.
    """

    def __init__(self, journal_dir: str | Path):
        self.journal_dir = Path(journal_dir)
        self.journal_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._load_existing()

    def _journal_path(self, session_id: str) -> Path:
        return self.journal_dir / f"{session_id}.journal"

    def _load_existing(self) -> None:
        for path in sorted(self.journal_dir.glob("*.journal")):
            try:
                session = recover(path)
            except JournalError as exc:
                logger.warning("skipping unrecoverable journal %s: %s", path, exc)
                continue
            if session.recovery_error is not None:
                logger.warning("journal %s recovered through seq %d: %s",
                               path, session._next_seq - 1, session.recovery_error)
                events, _ = read_journal(path)
                truncate_journal(path, events)
            session.attach_writer(JournalWriter(path))
            self._register(session)

    def _register(self, session: Session) -> None:
        with self._registry_lock:
            self._sessions[session.id] = session
            self._locks[session.id] = threading.Lock()

    def create(self, *, name: str, algorithm: str, config: EngineConfig,
               seed: int, max_generations: int = 5,
               space: ParameterSpace | None = None) -> Session:
        session_id = uuid.uuid4().hex
        path = self._journal_path(session_id)
        writer = JournalWriter(path)
        try:
            session = Session.create(
                name=name, algorithm=algorithm, config=config, seed=seed,
                max_generations=max_generations, space=space,
                session_id=session_id, journal_writer=writer)
        except Exception:
            writer.close()
            path.unlink(missing_ok=True)
            raise
        self._register(session)
        return session

    def get(self, session_id: str) -> Session | None:
        with self._registry_lock:
            return self._sessions.get(session_id)

    def lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks[session_id]

    def list(self) -> list[Session]:
        with self._registry_lock:
            sessions = list(self._sessions.values())
        return sorted(sessions, key=lambda s: (s.created_at or "", s.id))

    def close(self) -> None:
        for session in self.list():
            if session._writer is not None:
                session._writer.close()
