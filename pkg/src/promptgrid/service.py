"""HTTP service: session lifecycle, table retrieval, follow-up questions.

Sessions run their pipeline in a background thread; reads see snapshots
and every state change lands in the append-only event log first.
"""

from __future__ import annotations

import base64
import binascii
import threading
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import HTMLResponse, JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .config import AppConfig
from .errors import PromptGridError, ValidationError
from .eventlog import EventStore
from .gateway import ModelGateway
from .model import GenerationSession, SessionStatus, canonical_json, validate_session_input
from .pipeline import Pipeline, PipelineResult
from .tables import render_html, render_linear


class CreateSessionBody(BaseModel):
    prompt: str = ""
    images: list[dict[str, Any]] = Field(default_factory=list)


class QuestionBody(BaseModel):
    text: str = ""
    host_table: str | None = None


@dataclass
class SessionRuntime:
    session: GenerationSession
    status: SessionStatus
    rows_completed: int = 0
    rows_total: int | None = None
    result: PipelineResult | None = None
    error: str | None = None

    def progress(self) -> dict[str, Any]:
        return {
            "session_id": self.session.session_id,
            "status": self.status.value,
            "rows_completed": self.rows_completed,
            "rows_total": self.rows_total,
        }


class SessionService:
    """Owns all session state; every mutation goes through one lock per session."""

    def __init__(self, config: AppConfig, gateway: ModelGateway | None = None):
        self.config = config
        self.gateway = gateway or config.build_gateway()
        self.storage = Path(config.storage_dir)
        self.events = EventStore(self.storage)
        self.pipeline = Pipeline(
            self.gateway,
            detection_threshold=config.detection_threshold,
            parallelism=config.parallelism,
        )
        self._runtimes: dict[str, SessionRuntime] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    # -- storage ------------------------------------------------------------

    def _session_dir(self, session_id: str) -> Path:
        return self.storage / "sessions" / session_id

    def _write_snapshot(self, runtime: SessionRuntime) -> None:
        snapshot = {
            "status": runtime.status.value,
            "error": runtime.error,
            "session": runtime.session.to_dict(),
            "result": runtime.result.to_dict() if runtime.result else None,
        }
        path = self._session_dir(runtime.session.session_id) / "snapshot.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(canonical_json(snapshot) + "\n", "utf-8")

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def runtime_for(self, session_id: str) -> SessionRuntime:
        runtime = self._runtimes.get(session_id)
        if runtime is not None:
            return runtime
        snapshot_path = self._session_dir(session_id) / "snapshot.json"
        if snapshot_path.exists():
            import json

            snapshot = json.loads(snapshot_path.read_text("utf-8"))
            result = PipelineResult.from_dict(snapshot["result"]) if snapshot["result"] else None
            session = result.session if result else GenerationSession.from_dict(snapshot["session"])
            runtime = SessionRuntime(
                session=session,
                status=SessionStatus(snapshot["status"]),
                result=result,
                error=snapshot.get("error"),
            )
            if result is not None:
                runtime.rows_completed = len(result.matrix.rows)
                runtime.rows_total = len(result.matrix.rows)
            with self._registry_lock:
                self._runtimes.setdefault(session_id, runtime)
            return self._runtimes[session_id]
        raise KeyError(session_id)

    # -- lifecycle ------------------------------------------------------------

    def _materialize_images(self, session_id: str, images: list[dict[str, Any]]) -> list[str]:
        """Turn the posted image list into loadable refs, storing uploads."""
        refs = []
        upload_dir = self._session_dir(session_id) / "images"
        for position, entry in enumerate(images, start=1):
            if "path" in entry:
                refs.append(str(entry["path"]))
            elif "url" in entry:
                refs.append(str(entry["url"]))
            elif "content_base64" in entry:
                try:
                    data = base64.b64decode(entry["content_base64"], validate=True)
                except (binascii.Error, ValueError) as exc:
                    raise ValidationError(f"image {position} is not valid base64: {exc}") from exc
                if len(data) > self.config.upload_cap_bytes:
                    raise _UploadTooLarge(position, len(data))
                suffix = Path(str(entry.get("filename", f"image-{position}.bin"))).suffix or ".bin"
                upload_dir.mkdir(parents=True, exist_ok=True)
                target = upload_dir / f"{position}{suffix}"
                target.write_bytes(data)
                refs.append(str(target))
            else:
                raise ValidationError(
                    f"image {position} needs one of 'path', 'url' or 'content_base64'"
                )
        return refs

    def create_session(self, prompt: str, images: list[dict[str, Any]]) -> SessionRuntime:
        session_id = f"sess-{uuid.uuid4().hex[:12]}"
        refs = self._materialize_images(session_id, images)
        session = validate_session_input(prompt, refs, session_id=session_id)
        runtime = SessionRuntime(session=session, status=SessionStatus.CREATED)
        with self._registry_lock:
            self._runtimes[session_id] = runtime
        self.events.append(session_id, "created", {"session": session.to_dict()})
        self._write_snapshot(runtime)
        self._start_pipeline(runtime)
        return runtime

    def _start_pipeline(self, runtime: SessionRuntime) -> None:
        session_id = runtime.session.session_id
        lock = self._lock_for(session_id)

        def emit(kind: str, payload: dict[str, Any]) -> None:
            self.events.append(session_id, kind, payload)
            if kind == "row_completed":
                runtime.rows_completed += 1
            elif kind == "summaries_completed":
                runtime.status = SessionStatus.SUMMARIZING

        def work() -> None:
            with lock:
                if runtime.status != SessionStatus.CREATED:
                    return  # idempotent start: only one execution per session
                runtime.status = SessionStatus.EXTRACTING
            try:
                result = self.pipeline.run(runtime.session, on_event=emit)
            except PromptGridError as exc:
                with lock:
                    runtime.status = SessionStatus.FAILED
                    runtime.error = f"{type(exc).__name__}: {exc}"
                    self.events.append(session_id, "failed", {"error": runtime.error})
                    self._write_snapshot(runtime)
                return
            with lock:
                runtime.result = result
                runtime.session = result.session
                runtime.status = SessionStatus.READY
                runtime.rows_total = len(result.matrix.rows)
                runtime.rows_completed = len(result.matrix.rows)
                self._write_snapshot(runtime)

        thread = threading.Thread(target=work, name=f"pipeline-{session_id}", daemon=True)
        thread.start()

    def ask_question(self, session_id: str, text: str, host_table: str | None) -> dict[str, Any]:
        runtime = self.runtime_for(session_id)
        lock = self._lock_for(session_id)
        with lock:
            if runtime.status != SessionStatus.READY or runtime.result is None:
                raise _NotReady(runtime.status)
            result, row = self.pipeline.ask(
                runtime.result,
                text,
                host_table=host_table or self.config.default_host_table,
                on_event=lambda kind, payload: self.events.append(session_id, kind, payload),
            )
            runtime.result = result
            runtime.rows_total = len(result.matrix.rows)
            runtime.rows_completed = len(result.matrix.rows)
            self._write_snapshot(runtime)
        return row.to_dict()


class _NotReady(PromptGridError):
    def __init__(self, status: SessionStatus):
        self.status = status
        super().__init__(f"session is {status.value}")


class _UploadTooLarge(PromptGridError):
    def __init__(self, position: int, size: int):
        super().__init__(f"image {position} is {size} bytes, over the upload cap")


def create_app(
    config: AppConfig | None = None,
    *,
    gateway: ModelGateway | None = None,
    static_dir: str | Path | None = None,
) -> FastAPI:
    config = config or AppConfig.load()
    service = SessionService(config, gateway=gateway)
    app = FastAPI(title="promptgrid", version="0.1.0")
    app.state.service = service

    def _get_runtime(session_id: str) -> SessionRuntime:
        try:
            return service.runtime_for(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail={"error": "UnknownSession"})

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        try:
            runtime = service.create_session(body.prompt, body.images)
        except _UploadTooLarge as exc:
            raise HTTPException(status_code=413, detail={"error": "UploadTooLarge", "message": str(exc)})
        except ValidationError as exc:
            raise HTTPException(
                status_code=400,
                detail={"error": type(exc).__name__.removesuffix("Error"), "message": str(exc)},
            )
        return {"session_id": runtime.session.session_id, "status": runtime.status.value}

    @app.get("/sessions/{session_id}")
    def session_status(session_id: str):
        runtime = _get_runtime(session_id)
        payload = runtime.progress()
        if runtime.error:
            payload["error"] = runtime.error
        return payload

    @app.get("/sessions/{session_id}/tables")
    def session_tables(session_id: str, format: str = Query(default="json")):
        if format not in ("json", "html", "linear"):
            raise HTTPException(status_code=400, detail={"error": "UnknownFormat"})
        runtime = _get_runtime(session_id)
        if runtime.status == SessionStatus.FAILED:
            return JSONResponse(
                status_code=500,
                content={"error": "SessionFailed", "message": runtime.error},
            )
        if runtime.status != SessionStatus.READY or runtime.result is None:
            return JSONResponse(status_code=202, content=runtime.progress())
        tableset = runtime.result.tables()
        service.events.append(session_id, "tables_served", {"format": format})
        if format == "html":
            return HTMLResponse(render_html(tableset))
        if format == "linear":
            return PlainTextResponse(render_linear(tableset))
        return JSONResponse(content=tableset.to_dict())

    @app.post("/sessions/{session_id}/questions")
    def ask_question(session_id: str, body: QuestionBody):
        _get_runtime(session_id)  # 404 before any state checks
        try:
            row = service.ask_question(session_id, body.text, body.host_table)
        except _NotReady as exc:
            raise HTTPException(
                status_code=409,
                detail={"error": "SessionNotReady", "status": exc.status.value},
            )
        except ValidationError as exc:
            raise HTTPException(
                status_code=400,
                detail={"error": type(exc).__name__.removesuffix("Error"), "message": str(exc)},
            )
        return {"row": row}

    @app.get("/sessions/{session_id}/events")
    def session_events(session_id: str):
        _get_runtime(session_id)
        return {"events": [e.to_dict() for e in service.events.read(session_id, missing_ok=True)]}

    if static_dir is not None and Path(static_dir).exists():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
