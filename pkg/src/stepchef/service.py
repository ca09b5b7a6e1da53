"""HTTP service: session lifecycle, live event stream, transcript persistence.

Every session's work runs under that session's lock, one operation at a time;
handlers never touch session state outside it.  Interrupts only need the lock
long enough to enqueue, so they land while a run loop is between steps.
The event stream is server-sent events; it replays the session's transcript
and then follows live events, closing once the session is terminal.
"""

from __future__ import annotations

import json
import queue
import threading
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from .assets import load_domain_assets
from .config import ServiceConfig
from .errors import IllegalTransition, SessionTerminal, UnknownDomain
from .executor import refresh_scene
from .orchestrator import (
    Session,
    SessionState,
    advance,
    create_session,
    run,
    session_view,
    submit_request,
)
from .providers import OracleProvider, RemoteChatProvider
from .transcript import TranscriptRecord, TranscriptWriter

SSE_KEEPALIVE_S = 15.0


class CreateSessionBody(BaseModel):
    domain: str = "drink"
    seed: int = 0
    items: dict[str, int] | None = None


class TextBody(BaseModel):
    text: str


@dataclass
class SessionRuntime:
    session: Session
    lock: threading.Lock = field(default_factory=threading.Lock)
    subscribers: list[queue.Queue] = field(default_factory=list)
    sub_lock: threading.Lock = field(default_factory=threading.Lock)

    def fanout(self, record: TranscriptRecord) -> None:
        with self.sub_lock:
            for q in self.subscribers:
                q.put(record)

    def subscribe(self) -> tuple[queue.Queue, list[TranscriptRecord]]:
        with self.sub_lock:
            q: queue.Queue = queue.Queue()
            self.subscribers.append(q)
            return q, list(self.session.events)

    def unsubscribe(self, q: queue.Queue) -> None:
        with self.sub_lock:
            if q in self.subscribers:
                self.subscribers.remove(q)


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="stepchef gateway")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    writer = TranscriptWriter(config.transcript_dir)
    runtimes: dict[str, SessionRuntime] = {}
    assets_cache: dict[str, object] = {}

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": "malformed request body"})

    def make_provider():
        if config.provider.kind == "remote":
            return RemoteChatProvider(
                endpoint=config.provider.endpoint,
                model=config.provider.model,
                api_key_env=config.provider.api_key_env,
            )
        return None  # create_session defaults to the oracle

    def get_runtime(session_id: str) -> SessionRuntime:
        runtime = runtimes.get(session_id)
        if runtime is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return runtime

    @app.get("/healthz")
    def healthz():
        return {"ok": True}

    @app.post("/sessions")
    def create(body: CreateSessionBody):
        try:
            if body.domain not in assets_cache:
                assets_cache[body.domain] = load_domain_assets(
                    body.domain, config.paths_for(body.domain)
                )
            assets = assets_cache[body.domain]
            provider = make_provider()
            if provider is None:
                provider = OracleProvider(assets.lexicon)
            session = create_session(
                body.domain,
                provider=provider,
                seed=body.seed,
                assets=assets,
                world_items=body.items,
            )
        except UnknownDomain as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        runtime = SessionRuntime(session=session)
        session.hooks.append(writer.append)
        session.hooks.append(runtime.fanout)
        runtimes[session.id] = runtime
        return {"session_id": session.id, "state": session.state.value}

    @app.post("/sessions/{session_id}/request")
    def request_endpoint(session_id: str, body: TextBody):
        runtime = get_runtime(session_id)
        with runtime.lock:
            try:
                state = submit_request(runtime.session, body.text)
            except SessionTerminal as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            return {"state": state.value}

    @app.post("/sessions/{session_id}/interrupt")
    def interrupt_endpoint(session_id: str, body: TextBody):
        runtime = get_runtime(session_id)
        with runtime.lock:
            if runtime.session.state is SessionState.IDLE:
                raise HTTPException(status_code=409, detail="session has no active request")
            try:
                state = submit_request(runtime.session, body.text)
            except SessionTerminal as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            return {"queued": True, "state": state.value}

    @app.post("/sessions/{session_id}/advance")
    def advance_endpoint(session_id: str):
        runtime = get_runtime(session_id)
        with runtime.lock:
            try:
                state = advance(runtime.session)
            except IllegalTransition as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            return {"state": state.value}

    @app.post("/sessions/{session_id}/run")
    def run_endpoint(session_id: str):
        runtime = get_runtime(session_id)
        # lock per step, not for the whole run, so interrupts can slip in
        while True:
            with runtime.lock:
                if runtime.session.state is not SessionState.EXECUTING:
                    break
                advance(runtime.session)
        return {"state": runtime.session.state.value}

    @app.get("/sessions/{session_id}/state")
    def state_endpoint(session_id: str):
        runtime = get_runtime(session_id)
        with runtime.lock:
            return session_view(runtime.session)

    @app.get("/sessions/{session_id}/scene")
    def scene_endpoint(session_id: str):
        runtime = get_runtime(session_id)
        with runtime.lock:
            session = runtime.session
            scene = refresh_scene(session.world, session.cal, session.queries)
        return {
            "entries": [{"label": label, "x": x, "y": y} for label, x, y in scene.entries],
            "rendered": scene.rendered,
        }

    @app.get("/sessions/{session_id}/events")
    def events_endpoint(session_id: str):
        runtime = get_runtime(session_id)

        def stream():
            q, existing = runtime.subscribe()
            try:
                last_ts = 0
                for record in existing:
                    last_ts = record.timestamp
                    yield _sse(record)
                while True:
                    session_done = runtime.session.state.value in ("completed", "refused", "failed")
                    try:
                        record = q.get(timeout=0.05 if session_done else SSE_KEEPALIVE_S)
                    except queue.Empty:
                        if session_done:
                            break
                        yield ": keepalive\n\n"
                        continue
                    if record.timestamp <= last_ts:
                        continue
                    last_ts = record.timestamp
                    yield _sse(record)
            finally:
                runtime.unsubscribe(q)

        return StreamingResponse(stream(), media_type="text/event-stream")

    if config.console_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/console", StaticFiles(directory=config.console_dir, html=True), name="console")

    return app


def _sse(record: TranscriptRecord) -> str:
    return f"id: {record.timestamp}\ndata: {json.dumps(record.as_dict(), ensure_ascii=False)}\n\n"


def serve(config: ServiceConfig) -> None:
    """Run the gateway under uvicorn (blocking)."""
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="info")
