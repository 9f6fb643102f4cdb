"""HTTP API for running optimization sessions, plus static hosting for the console."""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .engines import config_from_dict, config_to_dict
from .genome import SpaceExhaustedError
from .session import (
    DuplicateMeasurementError,
    IncompleteGenerationError,
    MeasurementValidationError,
    RobotIndexError,
    Session,
    SessionError,
    SessionStore,
    StateConflictError,
    export,
)

_ERROR_STATUS = {
    StateConflictError.code: 409,
    IncompleteGenerationError.code: 409,
    DuplicateMeasurementError.code: 409,
    MeasurementValidationError.code: 400,
    RobotIndexError.code: 404,
}


class CreateSessionRequest(BaseModel):
    name: str
    algorithm: str
    config: dict = {}
    seed: int
    max_generations: int = 5


class MeasurementBody(BaseModel):
    slopes_dir_a: list[float] | None = None
    slopes_dir_b: list[float] | None = None
    speed: float | None = None


def _error(status: int, code: str, message: str, **details) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": {"code": code, "message": message, **details}})


def _label(value: float, unit: str) -> str:
    text = format(value, "g")
    return f"{text} {unit}".strip()


def session_summary(session: Session) -> dict:
    return {
        "id": session.id,
        "name": session.name,
        "algorithm": session.algorithm,
        "status": session.status,
        "current_generation": session.current_generation,
        "max_generations": session.max_generations,
        "population": session.population,
        "measured_count": len(session.current_measurements()),
        "created_at": session.created_at,
    }


def session_document(session: Session) -> dict:
    """Full state for the console: robot cards, completeness, best-speed history."""
    doc = session_summary(session)
    records = session.current_measurements()
    robots = []
    for idx, genotype in enumerate(session.proposals[session.current_generation]):
        record = records.get(idx)
        parameters = [
            {"name": dim.name, "unit": dim.unit, "value": value,
             "label": _label(value, dim.unit)}
            for dim, value in zip(session.space.dimensions, session.space.values_of(genotype))
        ]
        robots.append({
            "robot_index": idx,
            "genotype": list(genotype.indices),
            "parameters": parameters,
            "measured": record is not None,
            "speed": record.speed if record is not None else None,
        })
    completed = []
    for generation in range(len(session.proposals)):
        # a generation counts as completed once advance() has fed it to the
        # engine, not merely when its eighth measurement lands
        advanced_past = generation < session.current_generation or session.status == "complete"
        if advanced_past and session.generation_complete(generation):
            best = session.best_of_generation(generation)
            assert best is not None
            completed.append({
                "generation": generation,
                "best_speed": session.measurements[generation][best].speed,
                "best_robot_index": best,
            })
    doc.update({
        "seed": session.seed,
        "config": config_to_dict(session.config),
        "robots": robots,
        "completed_generations": completed,
        "missing_robots": session.missing_robots(),
    })
    return doc


def create_app(store: SessionStore, assets_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="evoswim session service")

    @app.exception_handler(SessionError)
    async def _session_error(_request: Request, exc: SessionError):
        status = _ERROR_STATUS.get(exc.code, 400)
        return _error(status, exc.code, str(exc), **exc.details)

    @app.post("/api/sessions", status_code=201)
    def create_session(body: CreateSessionRequest):
        try:
            config = config_from_dict(body.algorithm, body.config)
            session = store.create(name=body.name, algorithm=body.algorithm,
                                   config=config, seed=body.seed,
                                   max_generations=body.max_generations)
        except (ValueError, TypeError, SpaceExhaustedError) as exc:
            return _error(400, "invalid_config", str(exc))
        return session_document(session)

    @app.get("/api/sessions")
    def list_sessions():
        return [session_summary(s) for s in store.list()]

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        session = store.get(session_id)
        if session is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        with store.lock(session_id):
            return session_document(session)

    @app.put("/api/sessions/{session_id}/generations/current/robots/{robot_index}/measurement")
    def put_measurement(session_id: str, robot_index: int, body: MeasurementBody,
                        overwrite: bool = False):
        session = store.get(session_id)
        if session is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        with store.lock(session_id):
            record = session.record_measurement(
                robot_index,
                slopes_a=body.slopes_dir_a, slopes_b=body.slopes_dir_b,
                speed=body.speed, overwrite=overwrite)
            doc = session_document(session)
        doc["recorded"] = {"robot_index": record.robot_index, "speed": record.speed}
        return doc

    @app.post("/api/sessions/{session_id}/advance")
    def advance_session(session_id: str):
        session = store.get(session_id)
        if session is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        with store.lock(session_id):
            session.advance()
            return session_document(session)

    @app.get("/api/sessions/{session_id}/export")
    def export_session(session_id: str, format: str = "csv"):
        session = store.get(session_id)
        if session is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        with store.lock(session_id):
            try:
                text = export(session, format)
            except ValueError as exc:
                return _error(400, "unknown_format", str(exc))
        return PlainTextResponse(text, media_type="text/csv")

    if assets_dir is not None:
        app.mount("/", StaticFiles(directory=str(assets_dir), html=True), name="console")

    return app
