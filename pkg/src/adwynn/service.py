"""HTTP front for live experiment sessions.

Thin adapter: every endpoint delegates to the session layer and
serializes its payload with the package's canonical JSON writer, so
clients see 17-significant-digit floats everywhere.
"""

from __future__ import annotations

import os
from typing import Any

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .errors import (
    AdwynnError,
    SequencingError,
    SessionIntegrityError,
    SingularInformationError,
    StaleSuggestionError,
    UnknownSessionError,
)
from .io import dump_json
from .session import SessionStore

DATA_DIR_ENV = "ADWYNN_DATA_DIR"
DEFAULT_DATA_DIR = "adwynn-sessions"


def canonical_response(payload: Any, status_code: int = 200) -> Response:
    return Response(
        content=dump_json(payload),
        status_code=status_code,
        media_type="application/json",
    )


class CreateSessionBody(BaseModel):
    model: dict
    start_points: list[int]
    estimator: dict | None = None
    theta_seed: list[float] | None = None


class ObservationBody(BaseModel):
    index: int
    y: float
    suggestion_seq: int


def _error_payload(kind: str, exc: Exception, **extra) -> dict:
    doc = {"error": kind, "detail": str(exc)}
    doc.update(extra)
    return doc


def build_app(store: SessionStore) -> FastAPI:
    app = FastAPI(title="adaptive design sessions", docs_url=None, redoc_url=None)
    app.state.store = store
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(UnknownSessionError)
    async def _unknown(request: Request, exc: UnknownSessionError):
        return canonical_response(_error_payload("unknown session", exc), 404)

    @app.exception_handler(StaleSuggestionError)
    async def _stale(request: Request, exc: StaleSuggestionError):
        return canonical_response(_error_payload("stale suggestion", exc), 409)

    @app.exception_handler(SequencingError)
    async def _sequencing(request: Request, exc: SequencingError):
        return canonical_response(_error_payload("sequencing", exc), 409)

    @app.exception_handler(SingularInformationError)
    async def _singular(request: Request, exc: SingularInformationError):
        return canonical_response(
            _error_payload("singular information matrix", exc,
                           lambda_min=exc.lambda_min),
            422,
        )

    @app.exception_handler(SessionIntegrityError)
    async def _integrity(request: Request, exc: SessionIntegrityError):
        return canonical_response(_error_payload("session log corrupt", exc), 500)

    @app.exception_handler(AdwynnError)
    async def _validation(request: Request, exc: AdwynnError):
        return canonical_response(_error_payload("validation", exc), 422)

    @app.post("/sessions")
    def create_session(body: CreateSessionBody) -> Response:
        record = store.create(
            body.model, body.start_points, body.estimator, body.theta_seed
        )
        return canonical_response(record.public_state(), 201)

    @app.get("/sessions")
    def list_sessions() -> Response:
        return canonical_response({"sessions": store.list_ids()})

    @app.get("/sessions/{sid}")
    def get_session(sid: str) -> Response:
        return canonical_response(store.load(sid).public_state())

    @app.get("/sessions/{sid}/suggest")
    def get_suggestion(sid: str) -> Response:
        return canonical_response(store.load(sid).suggest())

    @app.post("/sessions/{sid}/observations")
    def post_observation(sid: str, body: ObservationBody) -> Response:
        record = store.load(sid)
        result = record.submit(body.index, body.y, body.suggestion_seq)
        return canonical_response(result, 201)

    @app.get("/sessions/{sid}/estimate")
    def get_estimate(sid: str) -> Response:
        return canonical_response(store.load(sid).estimate_payload())

    @app.get("/sessions/{sid}/sensitivity")
    def get_sensitivity(sid: str) -> Response:
        return canonical_response(store.load(sid).sensitivity_payload())

    @app.get("/sessions/{sid}/history")
    def get_history(sid: str) -> Response:
        return canonical_response(store.load(sid).history_payload())

    @app.delete("/sessions/{sid}")
    def delete_session(sid: str) -> Response:
        store.delete(sid)
        return Response(status_code=204)

    return app


def create_app(data_dir: str | None = None) -> FastAPI:
    """App factory; the data directory defaults to the environment."""
    if data_dir is None:
        data_dir = os.environ.get(DATA_DIR_ENV, DEFAULT_DATA_DIR)
    return build_app(SessionStore(data_dir))
