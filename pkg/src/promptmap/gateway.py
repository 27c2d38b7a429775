"""Uniform interface to image generation backends.

A bounded FIFO job queue drained by a small worker pool fronts either the
deterministic mock backend (default, fully offline) or a remote HTTP
text-to-image service. Completion callbacks fire outside the gateway lock
so callers can re-enter session state freely.
"""

from __future__ import annotations

import base64
import logging
import os
import threading
import time
from dataclasses import dataclass, field, replace
from queue import Empty, Queue
from typing import Callable

import httpx

from .errors import QueueFull, UnknownJob
from .graph import GenParams, new_id, now_ms
from .mockgen import mock_generate

logger = logging.getLogger(__name__)

_POLL_INTERVAL = 0.25


@dataclass
class BackendConfig:
    kind: str = "mock"  # mock | remote
    base_url: str = ""
    auth_token: str | None = None
    max_concurrency: int = 2
    request_timeout: float = 120.0
    queue_limit: int = 64  # pending (queued) jobs
    transport_retries: int = 1

    @classmethod
    def from_env(cls) -> "BackendConfig":
        return cls(
            kind=os.environ.get("PROMPTMAP_BACKEND", "mock"),
            base_url=os.environ.get("PROMPTMAP_BACKEND_URL", ""),
            auth_token=os.environ.get("PROMPTMAP_API_KEY") or None,
        )


@dataclass
class Job:
    job_id: str
    prompt: str
    params: GenParams
    state: str = "queued"  # queued | running | done | failed | cancelled
    result: list[bytes] = field(default_factory=list)
    error_message: str = ""
    submitted_at: int = 0
    finished_at: int = 0

    def snapshot(self) -> "Job":
        return replace(self, params=self.params.copy(), result=list(self.result))


class MockBackend:
    """Deterministic offline backend; see :mod:`promptmap.mockgen`."""

    def generate(self, prompt: str, params: GenParams) -> list[bytes]:
        return mock_generate(prompt, params)


class RemoteBackend:
    """Minimal submit/poll client for a remote text-to-image service.

    Protocol: ``POST {base_url}/generate`` with
    ``{prompt, seed, width, height, n}`` returning ``{job_id}``, then
    ``GET {base_url}/jobs/{id}`` until ``{state: done, images: [base64...]}``.
    Unknown extra params are passed through untouched.
    """

    def __init__(self, config: BackendConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        headers = {}
        if config.auth_token:
            headers["Authorization"] = f"Bearer {config.auth_token}"
        self._client = httpx.Client(
            base_url=config.base_url,
            timeout=config.request_timeout,
            headers=headers,
            transport=transport,
        )

    def generate(self, prompt: str, params: GenParams) -> list[bytes]:
        body = {
            "prompt": prompt,
            "seed": params.seed,
            "width": params.width,
            "height": params.height,
            "n": params.image_count,
        }
        resp = self._client.post("/generate", json=body)
        resp.raise_for_status()
        job_id = resp.json()["job_id"]
        deadline = time.monotonic() + self.config.request_timeout
        while True:
            resp = self._client.get(f"/jobs/{job_id}")
            resp.raise_for_status()
            data = resp.json()
            if data["state"] == "done":
                return [base64.b64decode(img) for img in data["images"]]
            if data["state"] in ("failed", "cancelled"):
                raise RuntimeError(data.get("error", f"remote job {data['state']}"))
            if time.monotonic() > deadline:
                raise TimeoutError(f"remote job {job_id} timed out")
            time.sleep(_POLL_INTERVAL)

    def close(self) -> None:
        self._client.close()


def make_backend(config: BackendConfig):
    if config.kind == "remote":
        return RemoteBackend(config)
    return MockBackend()


class GenerationGateway:
    """Bounded FIFO queue with at most ``max_concurrency`` running jobs."""

    def __init__(self, config: BackendConfig | None = None, backend=None):
        self.config = config or BackendConfig()
        self.backend = backend if backend is not None else make_backend(self.config)
        self._jobs: dict[str, Job] = {}
        self._callbacks: dict[str, Callable[[Job], None] | None] = {}
        self._cancel_requested: set[str] = set()
        self._lock = threading.Lock()
        self._done = threading.Condition(self._lock)
        self._queue: Queue = Queue()
        self._shutdown = False
        self._workers = [
            threading.Thread(target=self._worker, name=f"gen-worker-{i}", daemon=True)
            for i in range(max(1, self.config.max_concurrency))
        ]
        for w in self._workers:
            w.start()

    # -- public surface -------------------------------------------------

    def submit(self, prompt: str, params: GenParams,
               callback: Callable[[Job], None] | None = None) -> str:
        if not prompt.strip():
            raise ValueError("prompt must be non-empty")
        with self._lock:
            if self._shutdown:
                raise RuntimeError("gateway is shut down")
            pending = sum(1 for j in self._jobs.values() if j.state == "queued")
            if pending >= self.config.queue_limit:
                raise QueueFull(f"{pending} jobs already pending")
            job = Job(job_id=new_id(), prompt=prompt, params=params.copy(),
                      submitted_at=now_ms())
            self._jobs[job.job_id] = job
            self._callbacks[job.job_id] = callback
        self._queue.put(job.job_id)
        return job.job_id

    def poll(self, job_id: str) -> Job:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise UnknownJob(f"no job {job_id}")
            return job.snapshot()

    def cancel(self, job_id: str) -> None:
        callback = None
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise UnknownJob(f"no job {job_id}")
            if job.state == "queued":
                job.state = "cancelled"
                job.finished_at = now_ms()
                callback = self._callbacks.pop(job.job_id, None)
                snapshot = job.snapshot()
                self._done.notify_all()
            elif job.state == "running":
                # best effort: the worker discards the result on completion
                self._cancel_requested.add(job_id)
        if callback is not None:
            callback(snapshot)

    def drain(self, timeout: float = 30.0) -> bool:
        """Wait until every submitted job reaches a terminal state."""
        deadline = time.monotonic() + timeout
        with self._done:
            while any(j.state in ("queued", "running") for j in self._jobs.values()):
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return False
                self._done.wait(remaining)
        return True

    def shutdown(self) -> None:
        with self._lock:
            if self._shutdown:
                return
            self._shutdown = True
        for _ in self._workers:
            self._queue.put(None)
        for w in self._workers:
            w.join(timeout=5)
        if hasattr(self.backend, "close"):
            self.backend.close()

    # -- worker loop ------------------------------------------------------

    def _worker(self) -> None:
        while True:
            try:
                job_id = self._queue.get(timeout=0.5)
            except Empty:
                if self._shutdown:
                    return
                continue
            if job_id is None:
                return
            with self._lock:
                job = self._jobs[job_id]
                if job.state != "queued":  # cancelled while waiting
                    continue
                job.state = "running"
                prompt, params = job.prompt, job.params.copy()
            result: list[bytes] | None = None
            error = ""
            attempts = 1 + max(0, self.config.transport_retries)
            for attempt in range(attempts):
                try:
                    result = self.backend.generate(prompt, params)
                    break
                except httpx.TransportError as exc:
                    error = f"transport error: {exc}"
                    if attempt + 1 < attempts:
                        logger.warning("retrying job %s after %s", job_id, error)
                        continue
                except Exception as exc:
                    error = str(exc) or type(exc).__name__
                    break
            with self._lock:
                job = self._jobs[job_id]
                if job_id in self._cancel_requested:
                    self._cancel_requested.discard(job_id)
                    job.state = "cancelled"
                elif result is not None:
                    job.state = "done"
                    job.result = result
                else:
                    job.state = "failed"
                    job.error_message = error
                job.finished_at = now_ms()
                callback = self._callbacks.pop(job_id, None)
                snapshot = job.snapshot()
                self._done.notify_all()
            if callback is not None:
                try:
                    callback(snapshot)
                except Exception:
                    logger.exception("job callback failed for %s", job_id)
