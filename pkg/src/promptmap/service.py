"""HTTP facade over the engine: session CRUD, node operations, generation
orchestration, a server-sent event stream per session, and static assets.

Concurrency model: one lock per session serializes all mutations
(endpoint handlers and generation callbacks alike); different sessions
proceed in parallel. The event bus fans mutations out to SSE subscribers
with bounded buffers - a subscriber that falls too far behind is dropped
and must reconnect with its Last-Event-ID.
"""

from __future__ import annotations

import contextlib
import json
import logging
import os
import queue
import socket
import threading
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator

from fastapi import FastAPI, Header, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse
from pydantic import BaseModel

from . import analytics, graph, grid, store, subspace
from .errors import (
    DataDirUnwritable,
    EngineError,
    PortInUse,
    QueueFull,
    StaleSequence,
    UnknownSession,
)
from .gateway import BackendConfig, GenerationGateway, Job

logger = logging.getLogger(__name__)

API = "/api/v1"

_STATUS_BY_CODE = {
    "unknown_session": 404, "unknown_node": 404, "unknown_dimension": 404,
    "unknown_value": 404, "unknown_cell": 404, "unknown_job": 404,
    "index_out_of_range": 404,
    "stale_sequence": 409, "not_input_form": 409, "fork_from_draft": 409,
    "not_pending": 409, "source_incomplete": 409, "not_committed": 409,
    "last_value_removal": 409, "no_dimensions": 409,
    "queue_full": 429,
}
_DEFAULT_STATUS = 422  # validation-style failures


@dataclass
class ServerConfig:
    data_dir: Path = Path("promptmap-data")
    port: int = 8787
    host: str = "127.0.0.1"
    backend: BackendConfig = field(default_factory=BackendConfig)
    static_dir: Path | None = None
    heartbeat_seconds: float = 15.0
    subscriber_buffer: int = 256

    @classmethod
    def from_env(cls) -> "ServerConfig":
        cfg = cls(backend=BackendConfig.from_env())
        if os.environ.get("PROMPTMAP_DATA_DIR"):
            cfg.data_dir = Path(os.environ["PROMPTMAP_DATA_DIR"])
        if os.environ.get("PROMPTMAP_PORT"):
            cfg.port = int(os.environ["PROMPTMAP_PORT"])
        return cfg


# ----------------------------------------------------------------------
# per-session event fan-out


@dataclass
class UiEvent:
    sequence: int
    kind: str  # node_updated | images_ready | job_progress | session_saved
    body: dict[str, Any]


class _Subscriber:
    def __init__(self, buffer: int):
        self.queue: queue.Queue = queue.Queue(maxsize=buffer)
        self.dead = False


class EventBus:
    """Sequence-numbered event history with bounded live fan-out."""

    def __init__(self, buffer: int = 256):
        self._buffer = buffer
        self._lock = threading.Lock()
        self._history: list[UiEvent] = []
        self._subscribers: list[_Subscriber] = []
        self.sequence = 0

    def publish(self, kind: str, body: dict[str, Any]) -> UiEvent:
        with self._lock:
            self.sequence += 1
            ev = UiEvent(self.sequence, kind, body)
            self._history.append(ev)
            for sub in self._subscribers:
                try:
                    sub.queue.put_nowait(ev)
                except queue.Full:
                    sub.dead = True  # client must reconnect with Last-Event-ID
            self._subscribers = [s for s in self._subscribers if not s.dead]
        return ev

    def subscribe(self, last_seen: int = 0) -> tuple[list[UiEvent], _Subscriber]:
        with self._lock:
            replay = [ev for ev in self._history if ev.sequence > last_seen]
            sub = _Subscriber(self._buffer)
            self._subscribers.append(sub)
        return replay, sub

    def unsubscribe(self, sub: _Subscriber) -> None:
        with self._lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    def close(self) -> None:
        with self._lock:
            for sub in self._subscribers:
                sub.dead = True
                with contextlib.suppress(queue.Full):
                    sub.queue.put_nowait(None)
            self._subscribers = []


# ----------------------------------------------------------------------
# session manager


class SessionHandle:
    def __init__(self, session: graph.Session, buffer: int):
        self.session = session
        self.lock = threading.RLock()
        self.bus = EventBus(buffer)
        self.dirty = False


class SessionManager:
    """Owns live sessions, their locks and buses, and disk persistence."""

    def __init__(self, config: ServerConfig, gateway: GenerationGateway):
        self.config = config
        self.gateway = gateway
        self._handles: dict[str, SessionHandle] = {}
        self._lock = threading.Lock()
        self._jobs: dict[str, tuple[str, str, tuple[int, ...] | None]] = {}

    def create(self) -> SessionHandle:
        session = graph.create_session()
        handle = SessionHandle(session, self.config.subscriber_buffer)
        with self._lock:
            self._handles[session.session_id] = handle
        handle.dirty = True
        return handle

    def get(self, session_id: str) -> SessionHandle:
        with self._lock:
            handle = self._handles.get(session_id)
        if handle is not None:
            return handle
        path = self.config.data_dir / session_id
        if (path / store.DOCUMENT_NAME).exists():
            session = store.load_session(path)
            handle = SessionHandle(session, self.config.subscriber_buffer)
            with self._lock:
                return self._handles.setdefault(session_id, handle)
        raise UnknownSession(f"no session {session_id}")

    def list_ids(self) -> list[str]:
        ids = set(self._handles)
        if self.config.data_dir.is_dir():
            for entry in self.config.data_dir.iterdir():
                if (entry / store.DOCUMENT_NAME).exists():
                    ids.add(entry.name)
        return sorted(ids)

    @contextlib.contextmanager
    def mutate(self, session_id: str,
               base_sequence: int | None = None) -> Iterator[SessionHandle]:
        handle = self.get(session_id)
        with handle.lock:
            if base_sequence is not None and base_sequence != handle.bus.sequence:
                raise StaleSequence(
                    f"base sequence {base_sequence} != current {handle.bus.sequence}")
            yield handle
            handle.dirty = True

    def save(self, session_id: str) -> None:
        handle = self.get(session_id)
        with handle.lock:
            store.save_session(handle.session, self.config.data_dir / session_id)
            handle.dirty = False
            handle.bus.publish("session_saved", {"session_id": session_id})

    def save_dirty(self) -> None:
        with self._lock:
            handles = dict(self._handles)
        for sid, handle in handles.items():
            if handle.dirty:
                try:
                    self.save(sid)
                except Exception:
                    logger.exception("failed to persist session %s", sid)

    def find_blob(self, digest: str) -> bytes | None:
        with self._lock:
            handles = list(self._handles.values())
        for handle in handles:
            data = handle.session.blobs.get(digest)
            if data is not None:
                return data
        return None

    # -- generation round trip ------------------------------------------

    def submit_generation(self, session_id: str, node_id: str,
                          coords: tuple[int, ...] | None,
                          text: str, params: graph.GenParams) -> str:
        job_id = self.gateway.submit(
            text, params,
            callback=lambda job: self._on_job_terminal(session_id, node_id, coords, job))
        self._jobs[job_id] = (session_id, node_id, coords)
        # the callback may have fired before the ref was recorded
        if self.gateway.poll(job_id).state in ("done", "failed", "cancelled"):
            self._jobs.pop(job_id, None)
        return job_id

    def job_ref(self, job_id: str) -> tuple[str, str, tuple[int, ...] | None] | None:
        return self._jobs.get(job_id)

    def _on_job_terminal(self, session_id: str, node_id: str,
                         coords: tuple[int, ...] | None, job: Job) -> None:
        try:
            handle = self.get(session_id)
            with handle.lock:
                session = handle.session
                if job.state == "done":
                    delivered = subspace.deliver_images(
                        session, node_id, job.prompt, job.result, coords)
                    if delivered:
                        handle.bus.publish("images_ready", {
                            "node_id": node_id,
                            "coords": list(coords) if coords is not None else None,
                            "job_id": job.job_id,
                            "node": node_view(session, session.node(node_id)),
                        })
                    else:
                        logger.info("dropping stale generation for node %s", node_id)
                else:
                    subspace.resolve_failed_generation(
                        session, node_id, job.prompt, coords,
                        cancelled=job.state == "cancelled",
                        message=job.error_message)
                    handle.bus.publish("job_progress", {
                        "node_id": node_id, "job_id": job.job_id, "state": job.state,
                        "error": job.error_message,
                        "node": node_view(session, session.node(node_id))})
                handle.dirty = True
            self._jobs.pop(job.job_id, None)
            self.save(session_id)
        except Exception:
            logger.exception("generation callback failed for node %s", node_id)

    def close(self) -> None:
        self.save_dirty()
        with self._lock:
            handles = list(self._handles.values())
        for handle in handles:
            handle.bus.close()


# ----------------------------------------------------------------------
# views


def node_view(session: graph.Session, node: graph.Node) -> dict[str, Any]:
    """Persisted node fields plus derived values the UI renders from."""
    d = store.node_to_dict(node)
    score = graph.node_score(node)
    d["score"] = score
    d["color_class"] = "like" if score > 0 else "dislike" if score < 0 else "neutral"
    if node.kind == "subspace":
        d["grid"] = grid.grid_to_dict(grid.grid_layout(node.payload))
        d["base_text_with_fixed"] = node.payload.base_text_with_fixed()
        d["cell_scores"] = {
            ",".join(map(str, coords)): graph.record_score(cell.record)
            for coords, cell in node.payload.cells.items()
        }
    return d


def _parse_coords(raw: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in raw.split(",") if part != "")
    except ValueError:
        raise EngineError(f"bad coords segment {raw!r}") from None


# ----------------------------------------------------------------------
# request bodies


class PositionBody(BaseModel):
    x: float = 0.0
    y: float = 0.0


class OptionalPositionBody(BaseModel):
    x: float | None = None
    y: float | None = None

    def as_tuple(self) -> tuple[float, float] | None:
        if self.x is None or self.y is None:
            return None
        return (self.x, self.y)


class CommitBody(BaseModel):
    text: str
    params: dict[str, Any] | None = None


class DimensionBody(BaseModel):
    start: int
    end: int
    name: str
    values: list[str] = []


class DimensionEditBody(BaseModel):
    edit: str
    value: str | None = None
    name: str | None = None
    order: list[int] | None = None


class NodePatchBody(BaseModel):
    x: float | None = None
    y: float | None = None
    pinned: bool | None = None
    minimized: bool | None = None


class MarkBody(BaseModel):
    mark: str


class GroupBody(BaseModel):
    node_ids: list[str]
    name: str = "group"
    x: float | None = None
    y: float | None = None


# ----------------------------------------------------------------------
# app factory


def create_app(config: ServerConfig, gateway: GenerationGateway | None = None) -> FastAPI:
    gateway = gateway or GenerationGateway(config.backend)
    manager = SessionManager(config, gateway)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        # graceful shutdown: persist dirty sessions, stop workers, end streams
        manager.close()
        gateway.shutdown()

    app = FastAPI(title="promptmap", lifespan=lifespan)
    app.state.manager = manager
    app.state.gateway = gateway
    app.state.config = config

    @app.exception_handler(EngineError)
    async def engine_error_handler(_request: Request, exc: EngineError):
        status = _STATUS_BY_CODE.get(exc.code, _DEFAULT_STATUS)
        return JSONResponse(status_code=status,
                            content={"error": exc.code, "detail": str(exc)})

    # -- health and sessions ---------------------------------------------

    @app.get("/healthz", response_class=PlainTextResponse)
    def healthz() -> str:
        return "ok"

    @app.post(API + "/sessions", status_code=201)
    def create_session_ep():
        handle = manager.create()
        manager.save(handle.session.session_id)
        return {"session_id": handle.session.session_id,
                "sequence": handle.bus.sequence,
                "document": store.session_to_document(handle.session)}

    @app.get(API + "/sessions")
    def list_sessions_ep():
        return {"sessions": manager.list_ids()}

    @app.get(API + "/sessions/{sid}")
    def get_session_ep(sid: str):
        handle = manager.get(sid)
        with handle.lock:
            return {"sequence": handle.bus.sequence,
                    "document": store.session_to_document(handle.session),
                    "nodes": [node_view(handle.session, n)
                              for n in handle.session.nodes]}

    @app.put(API + "/sessions/{sid}")
    def put_session_ep(sid: str, doc: dict,
                       base_sequence: int | None = Header(default=None,
                                                          alias="X-Base-Sequence")):
        with manager.mutate(sid, base_sequence) as handle:
            replacement = store.document_to_session(doc, handle.session.blobs)
            replacement.session_id = sid
            handle.session = replacement
        manager.save(sid)
        handle = manager.get(sid)
        return {"sequence": handle.bus.sequence}

    # -- node lifecycle ----------------------------------------------------

    @app.post(API + "/sessions/{sid}/nodes", status_code=201)
    def add_node_ep(sid: str, body: PositionBody,
                    base_sequence: int | None = Header(default=None,
                                                       alias="X-Base-Sequence")):
        with manager.mutate(sid, base_sequence) as handle:
            nid = graph.add_root_input(handle.session, (body.x, body.y))
            view = node_view(handle.session, handle.session.node(nid))
            handle.bus.publish("node_updated", {"node": view})
            return {"node_id": nid, "node": view, "sequence": handle.bus.sequence}

    @app.post(API + "/sessions/{sid}/nodes/{nid}/fork", status_code=201)
    def fork_ep(sid: str, nid: str, body: OptionalPositionBody,
                base_sequence: int | None = Header(default=None, alias="X-Base-Sequence")):
        with manager.mutate(sid, base_sequence) as handle:
            child = graph.fork_node(handle.session, nid, body.as_tuple())
            view = node_view(handle.session, handle.session.node(child))
            handle.bus.publish("node_updated", {"node": view})
            return {"node_id": child, "node": view, "sequence": handle.bus.sequence}

    @app.post(API + "/sessions/{sid}/nodes/{nid}/commit", status_code=202)
    def commit_ep(sid: str, nid: str, body: CommitBody,
                  base_sequence: int | None = Header(default=None, alias="X-Base-Sequence")):
        with manager.mutate(sid, base_sequence) as handle:
            params = graph.params_from_dict(body.params).validate() if body.params else None
            record = graph.commit_input(handle.session, nid, body.text, params)
            job_id = manager.submit_generation(sid, nid, None, record.text, record.params)
            view = node_view(handle.session, handle.session.node(nid))
            handle.bus.publish("node_updated", {"node": view, "job_id": job_id})
            return {"job_id": job_id, "node_id": nid, "node": view,
                    "sequence": handle.bus.sequence}

    @app.patch(API + "/sessions/{sid}/nodes/{nid}")
    def patch_node_ep(sid: str, nid: str, body: NodePatchBody,
                      base_sequence: int | None = Header(default=None,
                                                         alias="X-Base-Sequence")):
        with manager.mutate(sid, base_sequence) as handle:
            session = handle.session
            if body.x is not None and body.y is not None:
                graph.move_node(session, nid, (body.x, body.y))
            if body.pinned is not None:
                graph.set_node_flag(session, nid, "pinned", body.pinned)
            if body.minimized is not None:
                graph.set_node_flag(session, nid, "minimized", body.minimized)
            view = node_view(session, session.node(nid))
            handle.bus.publish("node_updated", {"node": view})
            return {"node": view, "sequence": handle.bus.sequence}

    @app.post(API + "/sessions/{sid}/nodes/{nid}/images/{index}/mark")
    def mark_ep(sid: str, nid: str, index: int, body: MarkBody,
                base_sequence: int | None = Header(default=None, alias="X-Base-Sequence")):
        with manager.mutate(sid, base_sequence) as handle:
            score = graph.mark_image(handle.session, nid, index, body.mark)
            view = node_view(handle.session, handle.session.node(nid))
            handle.bus.publish("node_updated", {"node": view})
            return {"score": score, "node": view, "sequence": handle.bus.sequence}

    @app.post(API + "/sessions/{sid}/nodes/{nid}/images/{index}/extract", status_code=201)
    def extract_image_ep(sid: str, nid: str, index: int, body: OptionalPositionBody,
                         base_sequence: int | None = Header(default=None,
                                                            alias="X-Base-Sequence")):
        with manager.mutate(sid, base_sequence) as handle:
            child = graph.extract_image(handle.session, nid, index, body.as_tuple())
            view = node_view(handle.session, handle.session.node(child))
            handle.bus.publish("node_updated", {"node": view})
            return {"node_id": child, "node": view, "sequence": handle.bus.sequence}

    # -- subspace machinery ------------------------------------------------

    @app.post(API + "/sessions/{sid}/nodes/{nid}/dimensions", status_code=201)
    def define_dimension_ep(sid: str, nid: str, body: DimensionBody,
                            base_sequence: int | None = Header(default=None,
                                                               alias="X-Base-Sequence")):
        with manager.mutate(sid, base_sequence) as handle:
            node = subspace.define_dimension(handle.session, nid, (body.start, body.end),
                                             body.name, body.values)
            view = node_view(handle.session, node)
            handle.bus.publish("node_updated", {"node": view})
            return {"node": view, "sequence": handle.bus.sequence}

    @app.patch(API + "/sessions/{sid}/nodes/{nid}/dimensions/{did}")
    def edit_dimension_ep(sid: str, nid: str, did: str, body: DimensionEditBody,
                          base_sequence: int | None = Header(default=None,
                                                             alias="X-Base-Sequence")):
        with manager.mutate(sid, base_sequence) as handle:
            node = subspace.edit_dimension(handle.session, nid, body.edit,
                                           dimension_id=did if body.edit != "reorder_dimensions" else None,
                                           value=body.value, name=body.name, order=body.order)
            view = node_view(handle.session, node)
            handle.bus.publish("node_updated", {"node": view})
            return {"node": view, "sequence": handle.bus.sequence}

    @app.post(API + "/sessions/{sid}/nodes/{nid}/cells/{coords}/commit", status_code=202)
    def commit_cell_ep(sid: str, nid: str, coords: str,
                       base_sequence: int | None = Header(default=None,
                                                          alias="X-Base-Sequence")):
        parsed = _parse_coords(coords)
        with manager.mutate(sid, base_sequence) as handle:
            record = subspace.commit_cell(handle.session, nid, parsed)
            job_id = manager.submit_generation(sid, nid, parsed, record.text, record.params)
            view = node_view(handle.session, handle.session.node(nid))
            handle.bus.publish("node_updated", {"node": view, "job_id": job_id})
            return {"job_id": job_id, "node_id": nid, "coords": list(parsed),
                    "sequence": handle.bus.sequence}

    @app.post(API + "/sessions/{sid}/nodes/{nid}/cells/{coords}/extract", status_code=201)
    def extract_cell_ep(sid: str, nid: str, coords: str, body: OptionalPositionBody,
                        base_sequence: int | None = Header(default=None,
                                                           alias="X-Base-Sequence")):
        parsed = _parse_coords(coords)
        with manager.mutate(sid, base_sequence) as handle:
            child = subspace.extract_cell(handle.session, nid, parsed, body.as_tuple())
            view = node_view(handle.session, handle.session.node(child))
            handle.bus.publish("node_updated", {"node": view})
            return {"node_id": child, "node": view, "sequence": handle.bus.sequence}

    @app.post(API + "/sessions/{sid}/nodes/{nid}/cells/{coords}/images/{index}/mark")
    def mark_cell_ep(sid: str, nid: str, coords: str, index: int, body: MarkBody,
                     base_sequence: int | None = Header(default=None,
                                                        alias="X-Base-Sequence")):
        parsed = _parse_coords(coords)
        with manager.mutate(sid, base_sequence) as handle:
            score = subspace.mark_cell_image(handle.session, nid, parsed, index, body.mark)
            view = node_view(handle.session, handle.session.node(nid))
            handle.bus.publish("node_updated", {"node": view})
            return {"score": score, "node": view, "sequence": handle.bus.sequence}

    @app.post(API + "/sessions/{sid}/nodes/{nid}/cells/{coords}/images/{index}/extract",
              status_code=201)
    def extract_cell_image_ep(sid: str, nid: str, coords: str, index: int,
                              body: OptionalPositionBody,
                              base_sequence: int | None = Header(default=None,
                                                                 alias="X-Base-Sequence")):
        parsed = _parse_coords(coords)
        with manager.mutate(sid, base_sequence) as handle:
            child = graph.extract_image(handle.session, nid, index, body.as_tuple(), parsed)
            view = node_view(handle.session, handle.session.node(child))
            handle.bus.publish("node_updated", {"node": view})
            return {"node_id": child, "node": view, "sequence": handle.bus.sequence}

    @app.post(API + "/sessions/{sid}/nodes/{nid}/expand", status_code=202)
    def expand_ep(sid: str, nid: str,
                  base_sequence: int | None = Header(default=None, alias="X-Base-Sequence")):
        with manager.mutate(sid, base_sequence) as handle:
            session = handle.session
            ids = subspace.expand_chain(session, nid)
            jobs = []
            skipped = 0
            for child_id in ids:
                record = session.node(child_id).record
                if record.status == "pending":
                    try:
                        jobs.append(manager.submit_generation(
                            sid, child_id, None, record.text, record.params))
                    except QueueFull:
                        skipped += 1  # stays pending; queue bound reached
            handle.bus.publish("node_updated", {
                "nodes": [node_view(session, session.node(i)) for i in ids]})
            return {"node_ids": ids, "job_ids": jobs, "skipped": skipped,
                    "sequence": handle.bus.sequence}

    @app.post(API + "/sessions/{sid}/groups", status_code=201)
    def group_ep(sid: str, body: GroupBody,
                 base_sequence: int | None = Header(default=None, alias="X-Base-Sequence")):
        with manager.mutate(sid, base_sequence) as handle:
            pos = (body.x, body.y) if body.x is not None and body.y is not None else None
            nid = subspace.create_group_subspace(handle.session, body.node_ids,
                                                 body.name, pos)
            view = node_view(handle.session, handle.session.node(nid))
            handle.bus.publish("node_updated", {"node": view})
            return {"node_id": nid, "node": view, "sequence": handle.bus.sequence}

    # -- jobs ---------------------------------------------------------------

    @app.post(API + "/jobs/{job_id}/cancel")
    def cancel_job_ep(job_id: str):
        gateway.cancel(job_id)
        return {"job_id": job_id, "state": gateway.poll(job_id).state}

    @app.get(API + "/jobs/{job_id}")
    def poll_job_ep(job_id: str):
        job = gateway.poll(job_id)
        ref = manager.job_ref(job_id)
        return {"job_id": job.job_id, "state": job.state,
                "error_message": job.error_message,
                "node_id": ref[1] if ref else None,
                "submitted_at": job.submitted_at, "finished_at": job.finished_at}

    # -- read models ---------------------------------------------------------

    @app.get(API + "/sessions/{sid}/metrics")
    def metrics_ep(sid: str, bin_seconds: int = 60):
        handle = manager.get(sid)
        with handle.lock:
            return analytics.compute_metrics(handle.session, bin_seconds).to_dict()

    @app.get(API + "/sessions/{sid}/minimap")
    def minimap_ep(sid: str):
        handle = manager.get(sid)
        with handle.lock:
            return {"entries": [
                {"node_id": e.node_id, "x": e.position[0], "y": e.position[1],
                 "color_class": e.color_class, "intensity": e.intensity, "pinned": e.pinned}
                for e in graph.minimap_model(handle.session)
            ]}

    @app.get("/images/{digest}")
    def image_ep(digest: str):
        data = manager.find_blob(digest)
        if data is None:
            return JSONResponse(status_code=404, content={"error": "unknown_image"})
        return Response(content=data, media_type="image/png",
                        headers={"Cache-Control": "public, max-age=31536000, immutable"})

    # -- event stream ---------------------------------------------------------

    @app.get(API + "/sessions/{sid}/events")
    def events_ep(sid: str, request: Request,
                  last_event_id: int | None = Header(default=None, alias="Last-Event-ID"),
                  after: int | None = None):
        handle = manager.get(sid)
        last_seen = last_event_id if last_event_id is not None else (after or 0)
        replayed, sub = handle.bus.subscribe(last_seen)
        heartbeat = config.heartbeat_seconds

        def sse(ev: UiEvent) -> str:
            return f"id: {ev.sequence}\nevent: {ev.kind}\ndata: {json.dumps(ev.body)}\n\n"

        def stream():
            try:
                yield ": connected\n\n"
                for ev in replayed:
                    yield sse(ev)
                while not sub.dead:
                    try:
                        ev = sub.queue.get(timeout=heartbeat)
                    except queue.Empty:
                        yield ": hb\n\n"
                        continue
                    if ev is None:
                        break
                    yield sse(ev)
            finally:
                handle.bus.unsubscribe(sub)

        return StreamingResponse(stream(), media_type="text/event-stream",
                                 headers={"Cache-Control": "no-cache"})

    if config.static_dir is not None and Path(config.static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(config.static_dir), html=True),
                  name="static")

    return app


# ----------------------------------------------------------------------
# server entry


def check_config(config: ServerConfig) -> None:
    """Fail fast on an unusable data dir or occupied port."""
    data_dir = Path(config.data_dir)
    try:
        data_dir.mkdir(parents=True, exist_ok=True)
        probe = data_dir / ".write-probe"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        raise DataDirUnwritable(f"{data_dir}: {exc}") from exc
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as sock:
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            sock.bind((config.host, config.port))
        except OSError as exc:
            raise PortInUse(f"{config.host}:{config.port}: {exc}") from exc


def make_server(config: ServerConfig, gateway: GenerationGateway | None = None):
    """A configured uvicorn server (not yet running); raises PortInUse or
    DataDirUnwritable up front."""
    import uvicorn

    check_config(config)
    app = create_app(config, gateway)
    uv_config = uvicorn.Config(app, host=config.host, port=config.port,
                               log_level="warning", lifespan="on")
    return uvicorn.Server(uv_config)


def start_server(config: ServerConfig) -> int:
    """Run the service until SIGINT/SIGTERM; dirty sessions persist on exit."""
    server = make_server(config)
    server.run()
    return 0
