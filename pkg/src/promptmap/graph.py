"""Session state: the exploration tree of prompt and subspace nodes.

A session holds nodes in creation order. Prompt nodes move through three
forms (input -> prompt -> image), carry generation records, and cache a
token diff against their parent. Subspace nodes are owned by
:mod:`promptmap.subspace`; this module treats their payload structurally
(cells with records) where curation and scoring need it.

All mutating functions append to the session's event log so analytics and
replay see every creative action.
"""

from __future__ import annotations

import math
import time
import uuid
from dataclasses import dataclass, field, replace
from typing import Any

from . import diff as diffmod
from .errors import (
    EmptyPrompt,
    ForkFromDraft,
    IndexOutOfRange,
    InvalidParams,
    NonFinitePosition,
    NotInputForm,
    NotPending,
    SourceIncomplete,
    UnknownNode,
    WrongImageCount,
)
from .mockgen import content_hash

MARK_WEIGHTS = {"like": 1, "dislike": -1, "neutral": 0}

# Default placement of a new child: straight below its parent. Layout is
# otherwise entirely user-controlled.
NODE_HEIGHT = 200.0
CHILD_GAP = 40.0

# Generation defaults for fresh input nodes.
DEFAULT_IMAGE_COUNT = 4
DEFAULT_IMAGE_SIZE = 512
DEFAULT_MODEL_ID = "mock-diffusion"
PIXEL_CEILING = 1024 * 1024


def new_id() -> str:
    return uuid.uuid4().hex


def now_ms() -> int:
    return int(time.time() * 1000)


@dataclass
class GenParams:
    image_count: int = DEFAULT_IMAGE_COUNT
    seed: int | None = None
    width: int = DEFAULT_IMAGE_SIZE
    height: int = DEFAULT_IMAGE_SIZE
    model_id: str = DEFAULT_MODEL_ID

    def validate(self) -> "GenParams":
        if self.image_count < 1:
            raise InvalidParams("image_count must be >= 1")
        if self.width < 1 or self.height < 1:
            raise InvalidParams("width and height must be positive")
        if self.width * self.height > PIXEL_CEILING:
            raise InvalidParams(f"width*height exceeds the {PIXEL_CEILING} pixel ceiling")
        if self.seed is not None and self.seed < 0:
            raise InvalidParams("seed must be non-negative")
        return self

    def copy(self) -> "GenParams":
        return replace(self)


@dataclass
class ImageRecord:
    content_hash: str
    byte_length: int
    mark: str = "neutral"  # like | dislike | neutral

    def copy(self) -> "ImageRecord":
        return replace(self)


@dataclass
class PromptRecord:
    text: str = ""
    params: GenParams = field(default_factory=GenParams)
    images: list[ImageRecord] = field(default_factory=list)
    status: str = "draft"  # draft | pending | complete | failed

    def copy(self) -> "PromptRecord":
        return PromptRecord(
            text=self.text,
            params=self.params.copy(),
            images=[img.copy() for img in self.images],
            status=self.status,
        )


@dataclass
class Event:
    at: int
    kind: str
    node_id: str
    payload: dict[str, Any] = field(default_factory=dict)


@dataclass
class Viewport:
    pan_x: float = 0.0
    pan_y: float = 0.0
    zoom: float = 1.0


@dataclass
class Node:
    node_id: str
    kind: str  # prompt | subspace
    parent_id: str | None
    position: tuple[float, float]
    created_at: int
    form: str | None = None  # input | prompt | image (prompt kind only)
    pinned: bool = False
    minimized: bool = False
    payload: Any = None  # PromptRecord | subspace.Subspace
    diff: list[diffmod.DiffSpan] = field(default_factory=list)
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def record(self) -> PromptRecord:
        assert self.kind == "prompt"
        return self.payload


@dataclass
class Session:
    session_id: str
    created_at: int
    viewport: Viewport = field(default_factory=Viewport)
    nodes: list[Node] = field(default_factory=list)  # creation order
    events: list[Event] = field(default_factory=list)
    blobs: dict[str, bytes] = field(default_factory=dict)  # content_hash -> png bytes
    extra: dict[str, Any] = field(default_factory=dict)

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise UnknownNode(f"no node {node_id}")

    def children(self, node_id: str) -> list[Node]:
        return [n for n in self.nodes if n.parent_id == node_id]


def log_event(session: Session, kind: str, node_id: str, payload: dict[str, Any] | None = None,
              at: int | None = None) -> Event:
    ev = Event(at=now_ms() if at is None else at, kind=kind, node_id=node_id,
               payload=payload or {})
    session.events.append(ev)
    return ev


def default_child_position(parent: Node) -> tuple[float, float]:
    return (parent.position[0], parent.position[1] + NODE_HEIGHT + CHILD_GAP)


def _check_position(position: tuple[float, float]) -> tuple[float, float]:
    x, y = float(position[0]), float(position[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise NonFinitePosition(f"position ({position[0]}, {position[1]}) is not finite")
    return (x, y)


def node_text(node: Node) -> str:
    """The prompt text a node presents: committed text, or for subspace
    nodes the template with fixed assignments substituted."""
    if node.kind == "prompt":
        return node.record.text
    return node.payload.base_text_with_fixed()


def record_score(record: PromptRecord) -> float:
    if not record.images:
        return 0.0
    return sum(MARK_WEIGHTS[img.mark] for img in record.images) / len(record.images)


def node_score(node: Node) -> float:
    """Mean preference in [-1, 1]; subspace nodes average their cells."""
    if node.kind == "prompt":
        return record_score(node.record)
    cells = node.payload.cells
    if not cells:
        return 0.0
    return sum(record_score(c.record) for c in cells.values()) / len(cells)


# ----------------------------------------------------------------------
# session / node lifecycle


def create_session() -> Session:
    return Session(session_id=new_id(), created_at=now_ms())


def add_root_input(session: Session, position: tuple[float, float] = (0.0, 0.0), *,
                   _node_id: str | None = None, _at: int | None = None) -> str:
    node = Node(
        node_id=_node_id or new_id(),
        kind="prompt",
        parent_id=None,
        position=_check_position(position),
        created_at=now_ms() if _at is None else _at,
        form="input",
        payload=PromptRecord(),
    )
    session.nodes.append(node)
    log_event(session, "create_prompt_node", node.node_id,
              {"form": "input", "parent_id": None,
               "x": node.position[0], "y": node.position[1]}, at=node.created_at)
    return node.node_id


def fork_node(session: Session, node_id: str, position: tuple[float, float] | None = None, *,
              _node_id: str | None = None, _at: int | None = None) -> str:
    """New child input node pre-filled with the source's prompt and settings."""
    source = session.node(node_id)
    if source.kind == "prompt":
        if source.form == "input":
            raise ForkFromDraft("cannot fork an uncommitted input node")
        text = source.record.text
        params = source.record.params.copy()
    else:
        # Subspace fork: template with fixed values substituted, dimensions
        # dropped, giving an editable plain prompt.
        text = source.payload.base_text_with_fixed()
        params = source.payload.base_params.copy()
    pos = _check_position(position) if position is not None else default_child_position(source)
    node = Node(
        node_id=_node_id or new_id(),
        kind="prompt",
        parent_id=source.node_id,
        position=pos,
        created_at=now_ms() if _at is None else _at,
        form="input",
        payload=PromptRecord(text=text, params=params),
    )
    session.nodes.append(node)
    log_event(session, "create_prompt_node", node.node_id,
              {"form": "input", "parent_id": source.node_id,
               "x": pos[0], "y": pos[1]}, at=node.created_at)
    return node.node_id


def commit_input(session: Session, node_id: str, text: str,
                 params: GenParams | None = None, *, _at: int | None = None) -> PromptRecord:
    """Commit an input node: it becomes a prompt-form node awaiting images.

    The caller (normally the api layer) is responsible for submitting the
    generation job; the engine only flips state and caches the diff.
    """
    node = session.node(node_id)
    if node.kind != "prompt" or node.form != "input":
        raise NotInputForm(f"node {node_id} is not an input form")
    if not text.strip():
        raise EmptyPrompt("prompt text is empty")
    record = node.record
    record.text = text
    if params is not None:
        record.params = params.validate().copy()
    record.status = "pending"
    record.images = []
    node.form = "prompt"
    _recompute_diff(session, node)
    # Children may have cached diffs against this node's previous draft text
    # (possible after a cancel/re-commit round trip).
    for child in session.children(node_id):
        if child.kind == "prompt" and child.form in ("prompt", "image"):
            _recompute_diff(session, child)
    log_event(session, "generate", node_id,
              {"text": text, "params": params_to_dict(record.params)}, at=_at)
    return record


def _recompute_diff(session: Session, node: Node) -> None:
    parent_text = ""
    if node.parent_id is not None:
        parent_text = node_text(session.node(node.parent_id))
    node.diff = diffmod.diff_prompts(parent_text, node_text(node))


def store_blob(session: Session, data: bytes) -> ImageRecord:
    digest = content_hash(data)
    session.blobs.setdefault(digest, data)
    return ImageRecord(content_hash=digest, byte_length=len(data))


def attach_images(session: Session, node_id: str, images: list[bytes]) -> None:
    node = session.node(node_id)
    record = node.record
    if record.status != "pending":
        raise NotPending(f"node {node_id} is not awaiting images")
    if len(images) != record.params.image_count:
        raise WrongImageCount(
            f"expected {record.params.image_count} images, got {len(images)}")
    record.images = [store_blob(session, data) for data in images]
    record.status = "complete"


def mark_generation_failed(session: Session, node_id: str, message: str) -> None:
    node = session.node(node_id)
    if node.record.status == "pending":
        node.record.status = "failed"
        node.extra["error_message"] = message


def revert_to_draft(session: Session, node_id: str) -> None:
    """Roll a pending commit back to an editable input draft.

    Used when the generation job is cancelled; this is the one sanctioned
    reversal of the input->prompt form transition.
    """
    node = session.node(node_id)
    if node.kind != "prompt" or node.record.status != "pending":
        raise NotPending(f"node {node_id} has no pending generation to revert")
    node.form = "input"
    node.record.status = "draft"
    node.diff = []


def extract_image(session: Session, node_id: str, image_index: int,
                  position: tuple[float, float] | None = None,
                  coords: tuple[int, ...] | None = None, *,
                  _node_id: str | None = None, _at: int | None = None) -> str:
    """Drag one image out into a child image-form node.

    With ``coords`` the source is a subspace cell instead of the node's own
    record. The child references the same blob; no bytes are copied.
    """
    source = session.node(node_id)
    if coords is None:
        if source.kind != "prompt":
            raise SourceIncomplete("subspace sources need cell coords")
        record = source.record
    else:
        from .subspace import cell_at  # local import; subspace builds on graph

        record = cell_at(source, coords).record
    if record.status != "complete":
        raise SourceIncomplete("source has no completed images")
    if not 0 <= image_index < len(record.images):
        raise IndexOutOfRange(f"image index {image_index} out of range")
    pos = _check_position(position) if position is not None else default_child_position(source)
    child = Node(
        node_id=_node_id or new_id(),
        kind="prompt",
        parent_id=source.node_id,
        position=pos,
        created_at=now_ms() if _at is None else _at,
        form="image",
        payload=PromptRecord(
            text=record.text,
            params=record.params.copy(),
            images=[ImageRecord(content_hash=record.images[image_index].content_hash,
                                byte_length=record.images[image_index].byte_length)],
            status="complete",
        ),
    )
    session.nodes.append(child)
    _recompute_diff(session, child)
    payload: dict[str, Any] = {"child_id": child.node_id, "image_index": image_index,
                               "x": pos[0], "y": pos[1]}
    if coords is not None:
        payload["coords"] = list(coords)
    log_event(session, "extract_image", node_id, payload, at=child.created_at)
    return child.node_id


def mark_image(session: Session, node_id: str, image_index: int, mark: str, *,
               _at: int | None = None) -> float:
    node = session.node(node_id)
    if node.kind != "prompt":
        raise IndexOutOfRange("use mark_cell_image for subspace cells")
    if mark not in MARK_WEIGHTS:
        raise InvalidParams(f"unknown mark {mark!r}")
    record = node.record
    if not 0 <= image_index < len(record.images):
        raise IndexOutOfRange(f"image index {image_index} out of range")
    record.images[image_index].mark = mark
    log_event(session, "mark_image", node_id, {"image_index": image_index, "mark": mark}, at=_at)
    return node_score(node)


def set_node_flag(session: Session, node_id: str, flag: str, value: bool, *,
                  _at: int | None = None) -> None:
    node = session.node(node_id)
    if flag == "pinned":
        node.pinned = bool(value)
        log_event(session, "pin", node_id, {"value": bool(value)}, at=_at)
    elif flag == "minimized":
        node.minimized = bool(value)
        log_event(session, "minimize", node_id, {"value": bool(value)}, at=_at)
    else:
        raise InvalidParams(f"unknown flag {flag!r}")


def move_node(session: Session, node_id: str, position: tuple[float, float], *,
              _at: int | None = None) -> None:
    node = session.node(node_id)
    node.position = _check_position(position)
    log_event(session, "move", node_id,
              {"x": node.position[0], "y": node.position[1]}, at=_at)


# ----------------------------------------------------------------------
# mini-map


@dataclass(frozen=True)
class MinimapEntry:
    node_id: str
    position: tuple[float, float]
    color_class: str  # like | dislike | neutral
    intensity: float
    pinned: bool


def minimap_model(session: Session) -> list[MinimapEntry]:
    """Per-node color class and intensity from the preference score sign."""
    out = []
    for node in session.nodes:
        score = node_score(node)
        if score > 0:
            color = "like"
        elif score < 0:
            color = "dislike"
        else:
            color = "neutral"
        out.append(MinimapEntry(node.node_id, node.position, color, abs(score), node.pinned))
    return out


def params_to_dict(params: GenParams) -> dict[str, Any]:
    return {
        "image_count": params.image_count,
        "seed": params.seed,
        "width": params.width,
        "height": params.height,
        "model_id": params.model_id,
    }


def params_from_dict(d: dict[str, Any]) -> GenParams:
    return GenParams(
        image_count=d.get("image_count", DEFAULT_IMAGE_COUNT),
        seed=d.get("seed"),
        width=d.get("width", DEFAULT_IMAGE_SIZE),
        height=d.get("height", DEFAULT_IMAGE_SIZE),
        model_id=d.get("model_id", DEFAULT_MODEL_ID),
    )
