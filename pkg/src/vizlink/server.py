"""HTTP API exposing the pipeline to the web client."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from .agents import AgentBackend, HttpBackend, ModelRegistry, ScriptedBackend
from .dataset import Dataset, ingest_csv
from .errors import ERROR_REGISTRY, EngineError, NotFound, SchemaViolation
from .postprocess import revalidate_code
from .session import Pipeline, Session, attach_thumbnail, load_session
from .interaction import manipulation_from_wire

DEFAULT_PAGE_SIZE = 100


@dataclass
class ServerConfig:
    port: int = 8000
    models: tuple[str, ...] = ("gpt-4o", "gpt-4o-mini")
    backend: str = "scripted"  # "scripted" | "live"
    fixtures_dir: str | None = None
    cors_origins: tuple[str, ...] = ("*",)


def load_config(path: str | Path) -> ServerConfig:
    """Read a TOML or JSON config file into a ServerConfig."""
    text = Path(path).read_bytes()
    if str(path).endswith(".toml"):
        try:
            import tomllib  # py311+
        except ModuleNotFoundError:
            import tomli as tomllib
        doc = tomllib.loads(text.decode("utf-8"))
    else:
        doc = json.loads(text)
    return ServerConfig(
        port=doc.get("port", 8000),
        models=tuple(doc.get("models", ("gpt-4o", "gpt-4o-mini"))),
        backend=doc.get("backend", "scripted"),
        fixtures_dir=doc.get("fixtures_dir"),
        cors_origins=tuple(doc.get("cors_origins", ("*",))),
    )


class TurnBody(BaseModel):
    nl: str
    interactions: list[dict] = []


class EditTurnBody(BaseModel):
    nl: str | None = None
    interactions: list[dict] | None = None


class CodeBody(BaseModel):
    code: str


class ThumbnailBody(BaseModel):
    pngBase64: str


class CreateSessionBody(BaseModel):
    datasetId: str


class ModelBody(BaseModel):
    modelId: str


class Stores:
    def __init__(self):
        self.datasets: dict[str, Dataset] = {}
        self.sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def session_lock(self, session_id: str) -> threading.Lock:
        # per-session turn serialization
        with self._guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def require_dataset(self, dataset_id: str) -> Dataset:
        if dataset_id not in self.datasets:
            raise NotFound(f"unknown dataset {dataset_id}")
        return self.datasets[dataset_id]

    def require_session(self, session_id: str) -> Session:
        if session_id not in self.sessions:
            raise NotFound(f"unknown session {session_id}")
        return self.sessions[session_id]


def _build_backend(config: ServerConfig) -> AgentBackend:
    if config.backend == "live":
        return HttpBackend()
    if config.fixtures_dir:
        return ScriptedBackend.from_dir(config.fixtures_dir)
    return ScriptedBackend()


def _entry_response(entry) -> dict:
    return entry.to_doc()


def create_app(
    config: ServerConfig | None = None, backend: AgentBackend | None = None
) -> FastAPI:
    config = config or ServerConfig()
    registry = ModelRegistry(tuple(config.models))
    pipeline = Pipeline(backend or _build_backend(config), registry)
    stores = Stores()

    app = FastAPI(title="vizlink", version="0.1.0")
    app.state.stores = stores
    app.state.pipeline = pipeline
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(config.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(EngineError)
    async def engine_error_handler(_request: Request, exc: EngineError):
        assert exc.code in ERROR_REGISTRY
        return JSONResponse(
            status_code=exc.http_status,
            content={
                "code": exc.code,
                "message": exc.message,
                "detail": exc.detail,
            },
        )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/models")
    def models():
        return {"models": list(registry.model_ids), "default": registry.default}

    @app.post("/datasets")
    def upload_dataset(
        file: UploadFile = File(...),
        name: str | None = Form(None),
        description: str | None = Form(None),
    ):
        dataset = ingest_csv(
            file.file.read(),
            name or (file.filename or "dataset").removesuffix(".csv"),
            source_description=description,
        )
        stores.datasets[dataset.id] = dataset
        return {
            "id": dataset.id,
            "name": dataset.name,
            "rowCount": dataset.row_count,
            "attributes": [a.to_doc() for a in dataset.attributes],
        }

    @app.get("/datasets/{dataset_id}")
    def get_dataset(dataset_id: str, page: int = 0, page_size: int = DEFAULT_PAGE_SIZE):
        dataset = stores.require_dataset(dataset_id)
        if page < 0 or page_size <= 0:
            raise SchemaViolation("page must be >= 0 and page_size > 0")
        start = page * page_size
        return {
            "id": dataset.id,
            "name": dataset.name,
            "sourceDescription": dataset.source_description,
            "rowCount": dataset.row_count,
            "attributes": [a.to_doc() for a in dataset.attributes],
            "page": page,
            "pageSize": page_size,
            "rows": [dict(r) for r in dataset.rows[start : start + page_size]],
        }

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        dataset = stores.require_dataset(body.datasetId)
        session = pipeline.create_session(dataset)
        stores.sessions[session.id] = session
        return {"id": session.id, "datasetId": dataset.id, "modelId": session.model_id}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return stores.require_session(session_id).to_doc()

    @app.post("/sessions/{session_id}/turns")
    def post_turn(session_id: str, body: TurnBody):
        session = stores.require_session(session_id)
        dataset = stores.require_dataset(session.dataset_id)
        manipulations = [manipulation_from_wire(doc) for doc in body.interactions]
        with stores.session_lock(session_id):
            entry = pipeline.append_entry(session, dataset, body.nl, manipulations)
        return _entry_response(entry)

    @app.put("/sessions/{session_id}/turns/{index}")
    def edit_turn(session_id: str, index: int, body: EditTurnBody):
        session = stores.require_session(session_id)
        dataset = stores.require_dataset(session.dataset_id)
        manipulations = (
            [manipulation_from_wire(doc) for doc in body.interactions]
            if body.interactions is not None
            else None
        )
        with stores.session_lock(session_id):
            entry = pipeline.edit_entry(
                session, dataset, index, nl=body.nl, manipulations=manipulations
            )
        return _entry_response(entry)

    @app.put("/sessions/{session_id}/turns/{index}/code")
    def put_code(session_id: str, index: int, body: CodeBody):
        session = stores.require_session(session_id)
        if not 0 <= index < len(session.entries):
            raise NotFound(f"session has no entry {index}")
        with stores.session_lock(session_id):
            entry = session.entries[index]
            entry.artifact = revalidate_code(entry.artifact, body.code)
        return entry.artifact.to_doc()

    @app.post("/sessions/{session_id}/turns/{index}/thumbnail")
    def post_thumbnail(session_id: str, index: int, body: ThumbnailBody):
        session = stores.require_session(session_id)
        with stores.session_lock(session_id):
            attach_thumbnail(session, index, body.pngBase64)
        return {"ok": True}

    @app.put("/sessions/{session_id}/model")
    def put_model(session_id: str, body: ModelBody):
        session = stores.require_session(session_id)
        registry.require(body.modelId)
        session.model_id = body.modelId
        return {"ok": True, "modelId": session.model_id}

    @app.get("/sessions/{session_id}/export")
    def export_session(session_id: str):
        session = stores.require_session(session_id)
        dataset = stores.require_dataset(session.dataset_id)
        archive = {
            "archiveVersion": 1,
            "session": session.to_doc(),
            "dataset": dataset.to_doc(),
        }
        return Response(
            content=json.dumps(archive, ensure_ascii=False),
            media_type="application/json",
        )

    @app.post("/sessions/import")
    async def import_session(request: Request):
        body = await request.body()
        try:
            archive = json.loads(body)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"import body is not JSON: {exc}") from exc
        if not isinstance(archive, dict) or "session" not in archive:
            raise SchemaViolation("import body lacks a session document")
        session = load_session(
            json.dumps(archive["session"], ensure_ascii=False).encode("utf-8")
        )
        if "dataset" in archive and archive["dataset"]:
            dataset = Dataset.from_doc(archive["dataset"])
            stores.datasets[dataset.id] = dataset
        stores.require_dataset(session.dataset_id)
        stores.sessions[session.id] = session
        return {"id": session.id, "datasetId": session.dataset_id}

    return app
