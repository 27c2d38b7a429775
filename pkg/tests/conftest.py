"""Shared fixtures: prompt-word pools, a random session builder, and a
threaded test server.

The builder drives the real engine ops with a seeded RNG so fuzzed
sessions are valid by construction. Generated images always come from the
deterministic mock, which keeps sessions replayable from their event logs.
"""

from __future__ import annotations

import contextlib
import json
import random
import socket
import threading
import time
from pathlib import Path

import httpx
import pytest

from promptmap import graph, mockgen, subspace

WORDS = [
    "pig", "sheep", "fox", "otter", "crane", "whale", "tiger", "moth",
    "disney", "klee", "ukiyoe", "baroque", "pixel", "pastel", "noir",
    "sky", "moon", "forest", "harbor", "glacier", "dune", "reef",
    "bright", "glowing", "misty", "amber", "velvet", "quiet",
]

SMALL_PARAMS = dict(image_count=2, width=48, height=32)


def small_params(rng: random.Random | None = None) -> graph.GenParams:
    if rng is None:
        return graph.GenParams(**SMALL_PARAMS)
    return graph.GenParams(
        image_count=rng.randint(1, 3),
        seed=rng.choice([None, rng.randint(0, 999)]),
        width=rng.choice([16, 32, 48]),
        height=rng.choice([16, 24, 40]),
    )


def random_text(rng: random.Random, n_min: int = 3, n_max: int = 8) -> str:
    return " ".join(rng.choice(WORDS) for _ in range(rng.randint(n_min, n_max)))


def committed_node(session, text: str, params: graph.GenParams | None = None,
                   parent: str | None = None, attach: bool = True) -> str:
    """Root-or-fork a node, commit it, and (by default) attach mock images."""
    if parent is None:
        nid = graph.add_root_input(session, (0.0, 0.0))
    else:
        nid = graph.fork_node(session, parent)
    record = graph.commit_input(session, nid, text, params or small_params())
    if attach:
        graph.attach_images(session, nid, mockgen.mock_generate(record.text, record.params))
    return nid


def _free_token_spans(sub: subspace.Subspace) -> list[tuple[int, int]]:
    """Token spans of the base text not claimed by placeholders or fixed values."""
    base = sub.template.base_text
    taken = [(p.start, p.end) for p in sub.template.placeholders]
    taken += [(f.start, f.end) for f in sub.fixed]
    spans = []
    pos = 0
    for token in base.split():
        start = base.index(token, pos)
        end = start + len(token)
        pos = end
        if all(not (start < e and s < end) for s, e in taken):
            spans.append((start, end))
    return spans


def build_random_session(rng: random.Random, n_ops: int = 25,
                         attach_prob: float = 1.0) -> graph.Session:
    session = graph.create_session()
    committed_node(session, random_text(rng), small_params(rng))

    for _ in range(n_ops):
        prompts = [n for n in session.nodes
                   if n.kind == "prompt" and n.form in ("prompt", "image")]
        inputs = [n for n in session.nodes if n.kind == "prompt" and n.form == "input"]
        subs = [n for n in session.nodes if n.kind == "subspace"]
        op = rng.choice([
            "root", "fork", "commit", "define", "edit", "extract_image",
            "extract_cell", "expand", "mark", "flag", "move", "cell_commit", "group",
        ])
        try:
            if op == "root":
                graph.add_root_input(session, (rng.uniform(-500, 500), rng.uniform(-500, 500)))
            elif op == "fork" and (prompts or subs):
                graph.fork_node(session, rng.choice(prompts + subs).node_id)
            elif op == "commit" and inputs:
                node = rng.choice(inputs)
                record = graph.commit_input(session, node.node_id,
                                            random_text(rng), small_params(rng))
                if rng.random() < attach_prob:
                    graph.attach_images(session, node.node_id,
                                        mockgen.mock_generate(record.text, record.params))
            elif op == "define" and (prompts or subs):
                node = rng.choice(prompts + subs)
                if node.kind == "prompt" and node.record.status == "pending":
                    continue
                if node.kind == "prompt":
                    probe = subspace.Subspace(
                        template=subspace.Template(base_text=node.record.text))
                else:
                    probe = node.payload
                if len(probe.dimensions) >= 3:
                    continue
                free = _free_token_spans(probe)
                if not free:
                    continue
                extras = list({rng.choice(WORDS) + str(rng.randint(10, 99))
                               for _ in range(rng.randint(1, 2))})
                subspace.define_dimension(session, node.node_id, rng.choice(free),
                                          rng.choice(["subject", "style", "scene"]), extras)
            elif op == "edit" and subs:
                node = rng.choice(subs)
                sub = node.payload
                if not sub.dimensions:
                    continue
                dim = rng.choice(sub.dimensions)
                edit = rng.choice(["add_value", "remove_value", "rename",
                                   "reorder_values", "reorder_dimensions"])
                if edit == "add_value":
                    subspace.edit_dimension(session, node.node_id, "add_value",
                                            dim.dimension_id,
                                            rng.choice(WORDS) + str(rng.randint(100, 999)))
                elif edit == "remove_value" and len(dim.values) > 1:
                    subspace.edit_dimension(session, node.node_id, "remove_value",
                                            dim.dimension_id, rng.choice(dim.values))
                elif edit == "rename":
                    subspace.edit_dimension(session, node.node_id, "rename",
                                            dim.dimension_id, name=rng.choice(WORDS))
                elif edit == "reorder_values":
                    order = list(range(len(dim.values)))
                    rng.shuffle(order)
                    subspace.edit_dimension(session, node.node_id, "reorder_values",
                                            dim.dimension_id, order=order)
                elif edit == "reorder_dimensions":
                    order = list(range(len(sub.dimensions)))
                    rng.shuffle(order)
                    subspace.edit_dimension(session, node.node_id, "reorder_dimensions",
                                            order=order)
            elif op == "extract_image":
                done = [n for n in prompts if n.record.status == "complete"]
                if done:
                    node = rng.choice(done)
                    graph.extract_image(session, node.node_id,
                                        rng.randrange(len(node.record.images)))
            elif op == "extract_cell":
                candidates = [n for n in subs if n.payload.dimensions]
                if candidates:
                    node = rng.choice(candidates)
                    dims = node.payload.dimensions
                    depth = rng.randint(1, len(dims))
                    coords = tuple(rng.randrange(len(d.values)) for d in dims[:depth])
                    subspace.extract_cell(session, node.node_id, coords)
            elif op == "expand":
                candidates = [n for n in subs
                              if n.payload.dimensions and len(n.payload.cells) <= 6]
                if candidates:
                    subspace.expand_chain(session, rng.choice(candidates).node_id)
            elif op == "mark":
                targets = [n for n in prompts if n.record.images]
                if targets:
                    node = rng.choice(targets)
                    graph.mark_image(session, node.node_id,
                                     rng.randrange(len(node.record.images)),
                                     rng.choice(["like", "dislike", "neutral"]))
                cell_targets = [
                    (n, coords) for n in subs
                    for coords, c in n.payload.cells.items() if c.record.images
                ]
                if cell_targets and rng.random() < 0.5:
                    node, coords = rng.choice(cell_targets)
                    cell = node.payload.cells[coords]
                    subspace.mark_cell_image(session, node.node_id, coords,
                                             rng.randrange(len(cell.record.images)),
                                             rng.choice(["like", "dislike", "neutral"]))
            elif op == "flag":
                node = rng.choice(session.nodes)
                graph.set_node_flag(session, node.node_id,
                                    rng.choice(["pinned", "minimized"]), rng.random() < 0.5)
            elif op == "move":
                node = rng.choice(session.nodes)
                graph.move_node(session, node.node_id,
                                (rng.uniform(-900, 900), rng.uniform(-900, 900)))
            elif op == "cell_commit":
                candidates = [
                    (n, coords) for n in subs
                    for coords, c in n.payload.cells.items()
                    if c.record.status in ("draft", "failed")
                ]
                if candidates:
                    node, coords = rng.choice(candidates)
                    record = subspace.commit_cell(session, node.node_id, coords)
                    if rng.random() < attach_prob:
                        subspace.attach_cell_images(
                            session, node.node_id, coords,
                            mockgen.mock_generate(record.text, record.params))
            elif op == "group":
                base = random_text(rng, 2, 4)
                tail = random_text(rng, 2, 4)
                mids = rng.sample(WORDS, rng.randint(2, 3))
                ids = [committed_node(session, f"{base} {m} {tail}", small_params(rng))
                       for m in mids]
                subspace.create_group_subspace(session, ids, "grouped")
        except Exception:
            raise
    return session


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0FFEE)


# ----------------------------------------------------------------------
# HTTP test server


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@contextlib.contextmanager
def run_server(data_dir, *, backend=None, heartbeat: float = 0.2, static_dir=None,
               max_concurrency: int = 2):
    """Run the real uvicorn server on a free port; yields its base URL."""
    from promptmap.gateway import BackendConfig, GenerationGateway
    from promptmap.service import ServerConfig, make_server

    backend_config = BackendConfig(max_concurrency=max_concurrency)
    config = ServerConfig(data_dir=Path(data_dir), port=free_port(),
                          heartbeat_seconds=heartbeat,
                          static_dir=Path(static_dir) if static_dir else None,
                          backend=backend_config)
    gateway = GenerationGateway(backend_config, backend=backend) if backend is not None else None
    server = make_server(config, gateway)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{config.port}"
    deadline = time.monotonic() + 10
    with httpx.Client(timeout=2) as client:
        while True:
            try:
                if client.get(base + "/healthz").status_code == 200:
                    break
            except httpx.TransportError:
                pass
            if time.monotonic() > deadline:
                raise RuntimeError("test server did not come up")
            time.sleep(0.02)
    try:
        yield base
    finally:
        server.should_exit = True
        thread.join(timeout=10)


@pytest.fixture
def server(tmp_path):
    with run_server(tmp_path / "data") as base:
        yield base


def read_sse(client: httpx.Client, url: str, until, timeout: float = 8.0,
             headers: dict | None = None) -> list[dict]:
    """Collect parsed SSE frames (and comments) until ``until(frames)``."""
    frames: list[dict] = []
    deadline = time.monotonic() + timeout
    with client.stream("GET", url, headers=headers or {}, timeout=timeout) as resp:
        assert resp.status_code == 200
        assert resp.headers["content-type"].startswith("text/event-stream")
        current: dict = {}
        for line in resp.iter_lines():
            if time.monotonic() > deadline:
                break
            if line == "":
                if current:
                    frames.append(current)
                    current = {}
                if until(frames):
                    break
            elif line.startswith(":"):
                frames.append({"comment": line[1:].strip()})
                if until(frames):
                    break
            elif line.startswith("id: "):
                current["id"] = int(line[4:])
            elif line.startswith("event: "):
                current["event"] = line[7:]
            elif line.startswith("data: "):
                current["data"] = json.loads(line[6:])
    return frames
