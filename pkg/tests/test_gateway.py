"""Job queue semantics, concurrency bounds, and the two backends."""

from __future__ import annotations

import base64
import json
import threading
import time

import httpx
import pytest

from promptmap import mockgen
from promptmap.errors import QueueFull, UnknownJob
from promptmap.gateway import (
    BackendConfig,
    GenerationGateway,
    MockBackend,
    RemoteBackend,
)
from promptmap.graph import GenParams

PARAMS = GenParams(image_count=2, width=32, height=24)


class GateBackend:
    """Backend whose generates block until released; counts concurrency."""

    def __init__(self):
        self.release = threading.Event()
        self.running = 0
        self.peak = 0
        self.lock = threading.Lock()

    def generate(self, prompt, params):
        with self.lock:
            self.running += 1
            self.peak = max(self.peak, self.running)
        try:
            assert self.release.wait(timeout=10)
            return mockgen.mock_generate(prompt, params)
        finally:
            with self.lock:
                self.running -= 1


def test_fifo_start_order_with_single_worker():
    backend = GateBackend()
    gw = GenerationGateway(BackendConfig(max_concurrency=1), backend=backend)
    try:
        a = gw.submit("first", PARAMS)
        b = gw.submit("second", PARAMS)
        time.sleep(0.1)
        assert gw.poll(a).state == "running"
        assert gw.poll(b).state == "queued"
        backend.release.set()
        assert gw.drain(10)
        assert gw.poll(a).state == gw.poll(b).state == "done"
        assert gw.poll(a).finished_at >= gw.poll(a).submitted_at
    finally:
        backend.release.set()
        gw.shutdown()


def test_queue_full_at_configured_bound():
    backend = GateBackend()
    gw = GenerationGateway(BackendConfig(max_concurrency=1, queue_limit=64), backend=backend)
    try:
        first = gw.submit("job 0", PARAMS)
        deadline = time.monotonic() + 5
        while gw.poll(first).state != "running" and time.monotonic() < deadline:
            time.sleep(0.01)
        ids = [gw.submit(f"job {i}", PARAMS) for i in range(1, 65)]  # 64 pending
        with pytest.raises(QueueFull):
            gw.submit("the 65th pending job", PARAMS)
        assert sum(1 for i in ids if gw.poll(i).state == "queued") == 64
        assert len({first, *ids}) == 65  # job ids unique
    finally:
        backend.release.set()
        gw.shutdown()


def test_concurrency_never_exceeds_bound_under_stress():
    backend = GateBackend()
    backend.release.set()  # free-running
    gw = GenerationGateway(BackendConfig(max_concurrency=2, queue_limit=200), backend=backend)
    try:
        ids = [gw.submit(f"stress {i}", GenParams(image_count=1, width=16, height=16))
               for i in range(100)]
        assert gw.drain(30)
        assert backend.peak <= 2
        assert all(gw.poll(i).state == "done" for i in ids)  # liveness
        done = gw.poll(ids[0])
        assert len(done.result) == 1
    finally:
        gw.shutdown()


def test_poll_unknown_job():
    gw = GenerationGateway(BackendConfig(max_concurrency=1))
    try:
        with pytest.raises(UnknownJob):
            gw.poll("nope")
        with pytest.raises(UnknownJob):
            gw.cancel("nope")
    finally:
        gw.shutdown()


def test_cancel_queued_job_never_runs():
    backend = GateBackend()
    gw = GenerationGateway(BackendConfig(max_concurrency=1), backend=backend)
    seen = []
    try:
        running = gw.submit("running", PARAMS)
        queued = gw.submit("queued", PARAMS, callback=lambda job: seen.append(job.state))
        time.sleep(0.1)
        gw.cancel(queued)
        assert gw.poll(queued).state == "cancelled"
        assert seen == ["cancelled"]  # terminal callback fired
        backend.release.set()
        assert gw.drain(10)
        assert gw.poll(queued).state == "cancelled"
        assert gw.poll(running).state == "done"
    finally:
        backend.release.set()
        gw.shutdown()


def test_cancel_running_job_discards_result():
    backend = GateBackend()
    gw = GenerationGateway(BackendConfig(max_concurrency=1), backend=backend)
    try:
        jid = gw.submit("cancel me", PARAMS)
        time.sleep(0.1)
        gw.cancel(jid)
        assert gw.poll(jid).state == "running"  # best effort, still running
        backend.release.set()
        assert gw.drain(10)
        job = gw.poll(jid)
        assert job.state == "cancelled" and job.result == []
    finally:
        backend.release.set()
        gw.shutdown()


def test_cancel_done_job_stays_done():
    gw = GenerationGateway(BackendConfig(max_concurrency=1), backend=MockBackend())
    try:
        jid = gw.submit("a pig", PARAMS)
        assert gw.drain(10)
        gw.cancel(jid)
        assert gw.poll(jid).state == "done"
    finally:
        gw.shutdown()


def test_failed_backend_marks_job_failed():
    class Boom:
        def generate(self, prompt, params):
            raise RuntimeError("backend exploded")

    gw = GenerationGateway(BackendConfig(max_concurrency=1), backend=Boom())
    try:
        jid = gw.submit("a pig", PARAMS)
        assert gw.drain(10)
        job = gw.poll(jid)
        assert job.state == "failed" and "exploded" in job.error_message
    finally:
        gw.shutdown()


# ----------------------------------------------------------------------
# mock backend determinism


def test_mock_determinism_and_distinct_indices():
    a = mockgen.mock_generate("a pig in Disney style", PARAMS)
    b = mockgen.mock_generate("a pig in Disney style", PARAMS)
    assert a == b  # byte identical
    hashes = {mockgen.content_hash(blob) for blob in a}
    assert len(hashes) == len(a)  # per-index sub-seeding differs


def test_mock_collision_scan():
    seen = set()
    for i in range(250):
        for idx in range(4):
            seen.add(mockgen.derive_seed(f"prompt {i}", None, idx))
    assert len(seen) == 1000


def test_mock_output_is_valid_png():
    from PIL import Image
    import io

    blob = mockgen.mock_generate("a pig", GenParams(image_count=1, width=40, height=24))[0]
    assert mockgen.png_dimensions(blob) == (40, 24)
    img = Image.open(io.BytesIO(blob))
    img.verify()
    img = Image.open(io.BytesIO(blob))
    assert img.size == (40, 24) and img.mode == "RGB"


def test_image_count_change_keeps_earlier_images():
    two = mockgen.mock_generate("a pig", GenParams(image_count=2, width=16, height=16))
    four = mockgen.mock_generate("a pig", GenParams(image_count=4, width=16, height=16))
    assert four[:2] == two


# ----------------------------------------------------------------------
# remote adapter


def _remote_transport(fail_first: int = 0):
    """In-process fake of the remote protocol, optionally failing first."""
    state = {"jobs": {}, "failures": fail_first, "requests": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        state["requests"] += 1
        if state["failures"] > 0:
            state["failures"] -= 1
            raise httpx.ConnectError("boom", request=request)
        if request.url.path == "/generate":
            body = json.loads(request.content)
            job_id = f"rj{len(state['jobs'])}"
            blobs = mockgen.mock_generate(
                body["prompt"],
                GenParams(image_count=body["n"], seed=body["seed"],
                          width=body["width"], height=body["height"]))
            state["jobs"][job_id] = blobs
            return httpx.Response(200, json={"job_id": job_id})
        if request.url.path.startswith("/jobs/"):
            job_id = request.url.path.rsplit("/", 1)[1]
            blobs = state["jobs"][job_id]
            return httpx.Response(200, json={
                "state": "done",
                "images": [base64.b64encode(b).decode() for b in blobs],
            })
        return httpx.Response(404)

    return httpx.MockTransport(handler), state


def test_remote_backend_round_trip():
    transport, state = _remote_transport()
    config = BackendConfig(kind="remote", base_url="http://backend.test",
                           auth_token="secret")
    backend = RemoteBackend(config, transport=transport)
    blobs = backend.generate("a pig", PARAMS)
    assert blobs == mockgen.mock_generate("a pig", PARAMS)
    backend.close()


def test_remote_transport_error_retries_once_then_fails():
    transport, state = _remote_transport(fail_first=1)
    config = BackendConfig(kind="remote", base_url="http://backend.test")
    gw = GenerationGateway(config, backend=RemoteBackend(config, transport=transport))
    try:
        jid = gw.submit("a pig", PARAMS)
        assert gw.drain(10)
        assert gw.poll(jid).state == "done"  # one retry recovered it
    finally:
        gw.shutdown()

    transport, state = _remote_transport(fail_first=5)
    gw = GenerationGateway(config, backend=RemoteBackend(config, transport=transport))
    try:
        jid = gw.submit("a pig", PARAMS)
        assert gw.drain(10)
        job = gw.poll(jid)
        assert job.state == "failed" and "transport" in job.error_message
        assert state["requests"] == 2  # initial try + one retry
    finally:
        gw.shutdown()
