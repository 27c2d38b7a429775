"""Versioned session persistence.

One directory per session: ``session.json`` (the schema-versioned document)
plus content-addressed image blobs under ``blobs/``. Documents are written
atomically (temp file + rename) so an interrupted save never clobbers the
previous one. Unknown fields in a newer-but-compatible document survive a
load/save round trip untouched.

Loading recomputes every derived value the document carries (cell prompt
texts, diff spans, blob digests) and treats any mismatch as corruption.
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import Any

from . import diff as diffmod
from .errors import CorruptDocument, IoError, VersionTooNew
from .graph import (
    Event,
    ImageRecord,
    Node,
    PromptRecord,
    Session,
    Viewport,
    node_text,
    params_from_dict,
    params_to_dict,
)
from .mockgen import content_hash
from .subspace import (
    Cell,
    Dimension,
    FixedAssignment,
    Placeholder,
    Subspace,
    Template,
    cell_text,
)

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

DOCUMENT_NAME = "session.json"
BLOB_DIR = "blobs"

_DOC_KEYS = {"format_version", "session", "events", "image_store"}
_SESSION_KEYS = {"session_id", "created_at", "viewport", "nodes"}
_NODE_KEYS = {"node_id", "kind", "parent_id", "x", "y", "pinned", "minimized",
              "created_at", "form", "diff", "record", "subspace"}


# ----------------------------------------------------------------------
# to document


def _record_to_dict(record: PromptRecord) -> dict[str, Any]:
    return {
        "text": record.text,
        "params": params_to_dict(record.params),
        "images": [
            {"content_hash": img.content_hash, "byte_length": img.byte_length, "mark": img.mark}
            for img in record.images
        ],
        "status": record.status,
    }


def _subspace_to_dict(sub: Subspace) -> dict[str, Any]:
    return {
        "template": {
            "base_text": sub.template.base_text,
            "placeholders": [
                {"start": ph.start, "end": ph.end, "dimension_id": ph.dimension_id}
                for ph in sub.template.placeholders
            ],
        },
        "dimensions": [
            {"dimension_id": d.dimension_id, "name": d.name,
             "color_index": d.color_index, "values": list(d.values)}
            for d in sub.dimensions
        ],
        "fixed": [
            {"name": f.name, "value": f.value, "start": f.start, "end": f.end,
             "color_index": f.color_index}
            for f in sub.fixed
        ],
        "base_params": params_to_dict(sub.base_params),
        "cells": [
            {"coords": list(cell.coords), "prompt_text": cell.prompt_text,
             "record": _record_to_dict(cell.record)}
            for cell in sub.cells.values()
        ],
        "generated": {text: _record_to_dict(rec) for text, rec in sub.generated.items()},
    }


def node_to_dict(node: Node) -> dict[str, Any]:
    d: dict[str, Any] = {
        "node_id": node.node_id,
        "kind": node.kind,
        "parent_id": node.parent_id,
        "x": node.position[0],
        "y": node.position[1],
        "pinned": node.pinned,
        "minimized": node.minimized,
        "created_at": node.created_at,
        "form": node.form,
        "diff": [diffmod.span_to_dict(s) for s in node.diff],
    }
    if node.kind == "prompt":
        d["record"] = _record_to_dict(node.payload)
    else:
        d["subspace"] = _subspace_to_dict(node.payload)
    d.update(node.extra)
    return d


def session_to_document(session: Session) -> dict[str, Any]:
    session_extra = {k: v for k, v in session.extra.items() if k != "_document_extra"}
    doc: dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "session": {
            "session_id": session.session_id,
            "created_at": session.created_at,
            "viewport": {
                "pan_x": session.viewport.pan_x,
                "pan_y": session.viewport.pan_y,
                "zoom": session.viewport.zoom,
            },
            "nodes": [node_to_dict(n) for n in session.nodes],
            **session_extra,
        },
        "events": [
            {"at": ev.at, "kind": ev.kind, "node_id": ev.node_id, "payload": ev.payload}
            for ev in session.events
        ],
        "image_store": {h: f"{BLOB_DIR}/{h}.png" for h in sorted(session.blobs)},
    }
    doc.update(session.extra.get("_document_extra", {}))
    return doc


# ----------------------------------------------------------------------
# from document


def _record_from_dict(d: dict[str, Any]) -> PromptRecord:
    return PromptRecord(
        text=d["text"],
        params=params_from_dict(d["params"]),
        images=[
            ImageRecord(content_hash=i["content_hash"], byte_length=i["byte_length"],
                        mark=i.get("mark", "neutral"))
            for i in d["images"]
        ],
        status=d["status"],
    )


def _subspace_from_dict(d: dict[str, Any]) -> Subspace:
    template = Template(
        base_text=d["template"]["base_text"],
        placeholders=[
            Placeholder(start=p["start"], end=p["end"], dimension_id=p["dimension_id"])
            for p in d["template"]["placeholders"]
        ],
    )
    sub = Subspace(
        template=template,
        dimensions=[
            Dimension(dimension_id=x["dimension_id"], name=x["name"],
                      color_index=x["color_index"], values=list(x["values"]))
            for x in d["dimensions"]
        ],
        fixed=[
            FixedAssignment(name=f["name"], value=f["value"], start=f["start"],
                            end=f["end"], color_index=f.get("color_index", 0))
            for f in d["fixed"]
        ],
        base_params=params_from_dict(d["base_params"]),
        generated={text: _record_from_dict(rec) for text, rec in d.get("generated", {}).items()},
    )
    for c in d["cells"]:
        coords = tuple(int(v) for v in c["coords"])
        sub.cells[coords] = Cell(coords=coords, prompt_text=c["prompt_text"],
                                 record=_record_from_dict(c["record"]))
    return sub


def _node_from_dict(d: dict[str, Any]) -> Node:
    kind = d["kind"]
    if kind == "prompt":
        payload: Any = _record_from_dict(d["record"])
    elif kind == "subspace":
        payload = _subspace_from_dict(d["subspace"])
    else:
        raise CorruptDocument(f"unknown node kind {kind!r}")
    return Node(
        node_id=d["node_id"],
        kind=kind,
        parent_id=d.get("parent_id"),
        position=(float(d["x"]), float(d["y"])),
        created_at=d["created_at"],
        form=d.get("form"),
        pinned=bool(d.get("pinned", False)),
        minimized=bool(d.get("minimized", False)),
        payload=payload,
        diff=[diffmod.span_from_dict(s) for s in d.get("diff", [])],
        extra={k: v for k, v in d.items() if k not in _NODE_KEYS},
    )


def _verify_session(session: Session) -> None:
    """Structural checks plus recomputation of derived caches."""
    index = {n.node_id: i for i, n in enumerate(session.nodes)}
    if len(index) != len(session.nodes):
        raise CorruptDocument("duplicate node ids")
    for i, node in enumerate(session.nodes):
        if node.parent_id is not None:
            pi = index.get(node.parent_id)
            if pi is None:
                raise CorruptDocument(f"node {node.node_id} has a dangling parent")
            if pi >= i:
                raise CorruptDocument(f"node {node.node_id} precedes its parent")
    for node in session.nodes:
        if node.kind == "subspace":
            sub: Subspace = node.payload
            for coords, cell in sub.cells.items():
                expected = cell_text(sub, coords)
                if cell.prompt_text != expected or cell.record.text != expected:
                    raise CorruptDocument(
                        f"cell {coords} text does not match its template")
        if node.kind == "prompt" and node.form in ("prompt", "image"):
            parent_text = ""
            if node.parent_id is not None:
                parent_text = node_text(session.nodes[index[node.parent_id]])
            expected_diff = diffmod.diff_prompts(parent_text, node_text(node))
            if node.diff != expected_diff:
                raise CorruptDocument(
                    f"node {node.node_id} diff does not match its parent")
        for record in _iter_records(node):
            for img in record.images:
                if img.content_hash not in session.blobs:
                    raise CorruptDocument(f"missing blob {img.content_hash}")


def _iter_records(node: Node):
    if node.kind == "prompt":
        yield node.payload
    else:
        for cell in node.payload.cells.values():
            yield cell.record
        for rec in node.payload.generated.values():
            yield rec


def document_to_session(doc: dict[str, Any], blobs: dict[str, bytes] | None = None) -> Session:
    try:
        version = doc["format_version"]
        if not isinstance(version, int):
            raise CorruptDocument("format_version must be an integer")
        if version > FORMAT_VERSION:
            raise VersionTooNew(f"document format {version} > supported {FORMAT_VERSION}")
        sdoc = doc["session"]
        vp = sdoc.get("viewport", {})
        session = Session(
            session_id=sdoc["session_id"],
            created_at=sdoc["created_at"],
            viewport=Viewport(pan_x=float(vp.get("pan_x", 0.0)),
                              pan_y=float(vp.get("pan_y", 0.0)),
                              zoom=float(vp.get("zoom", 1.0))),
            nodes=[_node_from_dict(nd) for nd in sdoc["nodes"]],
            events=[Event(at=e["at"], kind=e["kind"], node_id=e["node_id"],
                          payload=e.get("payload", {}))
                    for e in doc.get("events", [])],
            blobs=dict(blobs or {}),
            extra={k: v for k, v in sdoc.items() if k not in _SESSION_KEYS},
        )
        doc_extra = {k: v for k, v in doc.items() if k not in _DOC_KEYS}
        if doc_extra:
            session.extra["_document_extra"] = doc_extra
        _verify_session(session)
        return session
    except (VersionTooNew, CorruptDocument):
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise CorruptDocument(f"malformed document: {exc}") from exc


# ----------------------------------------------------------------------
# disk round trip


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + f".tmp.{os.getpid()}")
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink(missing_ok=True)


def save_session(session: Session, directory: str | Path) -> Path:
    """Write the document and any missing blobs; returns the document path."""
    directory = Path(directory)
    try:
        blob_dir = directory / BLOB_DIR
        blob_dir.mkdir(parents=True, exist_ok=True)
        for digest, data in session.blobs.items():
            blob_path = blob_dir / f"{digest}.png"
            if not blob_path.exists():  # content-addressed: write once
                _atomic_write(blob_path, data)
        doc = session_to_document(session)
        path = directory / DOCUMENT_NAME
        _atomic_write(path, json.dumps(doc, indent=1).encode("utf-8"))
        return path
    except OSError as exc:
        raise IoError(f"cannot save session: {exc}") from exc


def load_session(path: str | Path) -> Session:
    """Load a session from its directory (or document path)."""
    path = Path(path)
    if path.is_dir():
        path = path / DOCUMENT_NAME
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CorruptDocument(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise CorruptDocument("document root must be an object")
    blobs: dict[str, bytes] = {}
    base = path.parent
    for digest, rel in doc.get("image_store", {}).items():
        blob_path = base / rel
        try:
            data = blob_path.read_bytes()
        except OSError as exc:
            raise CorruptDocument(f"missing blob file {rel}") from exc
        if content_hash(data) != digest:
            raise CorruptDocument(f"blob {rel} does not match its digest")
        blobs[digest] = data
    return document_to_session(doc, blobs)


def sessions_equal(a: Session, b: Session) -> bool:
    """Structural equality as persisted: documents and blob bytes."""
    return session_to_document(a) == session_to_document(b) and a.blobs == b.blobs
