"""Structured prompt subspaces: templates, dimensions, Cartesian cells.

A subspace is a prompt template plus ordered dimensions, each bound to a
byte span of the immutable base text. Cells are the Cartesian product of
dimension values; their prompt text is a pure function of (template,
dimensions, fixed assignments, coords). Fixed assignments are values
inherited from an extracted parent cell: substituted like dimension values
but no longer varied.

All span arithmetic happens against the original base text, so offsets
never need rewriting when values of different lengths are substituted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import _kernels
from .errors import (
    DuplicateValue,
    EmptySpan,
    EmptyValue,
    IndexOutOfRange,
    InvalidParams,
    LastValueRemoval,
    NoDimensions,
    NotCommitted,
    NotPending,
    NotSingleDimension,
    OverlappingSpan,
    TooFewPrompts,
    UnknownCell,
    UnknownDimension,
    UnknownValue,
    WrongImageCount,
)
from .graph import (
    GenParams,
    Node,
    PromptRecord,
    Session,
    default_child_position,
    log_event,
    new_id,
    now_ms,
    params_to_dict,
    store_blob,
)
from . import graph

PALETTE_SLOTS = 8


@dataclass
class Placeholder:
    start: int
    end: int
    dimension_id: str


@dataclass
class Template:
    base_text: str
    placeholders: list[Placeholder] = field(default_factory=list)


@dataclass
class Dimension:
    dimension_id: str
    name: str
    color_index: int
    values: list[str]


@dataclass
class FixedAssignment:
    name: str
    value: str
    start: int
    end: int
    color_index: int = 0


@dataclass
class Cell:
    coords: tuple[int, ...]
    prompt_text: str
    record: PromptRecord


@dataclass
class Subspace:
    template: Template
    dimensions: list[Dimension] = field(default_factory=list)
    fixed: list[FixedAssignment] = field(default_factory=list)
    base_params: GenParams = field(default_factory=GenParams)
    cells: dict[tuple[int, ...], Cell] = field(default_factory=dict)
    # Completed records by exact prompt text, kept across dimension edits so
    # paid generation work survives value removal/re-adding.
    generated: dict[str, PromptRecord] = field(default_factory=dict)

    def dimension(self, dimension_id: str) -> Dimension:
        for d in self.dimensions:
            if d.dimension_id == dimension_id:
                return d
        raise UnknownDimension(f"no dimension {dimension_id}")

    def placeholder_for(self, dimension_id: str) -> Placeholder:
        for ph in self.template.placeholders:
            if ph.dimension_id == dimension_id:
                return ph
        raise UnknownDimension(f"no placeholder for dimension {dimension_id}")

    def base_text_with_fixed(self) -> str:
        return _render(self.template.base_text, [(f.start, f.end, f.value) for f in self.fixed])

    def radices(self) -> list[int]:
        return [len(d.values) for d in self.dimensions]


def _render(base_text: str, slots: list[tuple[int, int, str]]) -> str:
    # Descending span order keeps earlier offsets valid while substituting.
    out = base_text
    for start, end, value in sorted(slots, reverse=True):
        out = out[:start] + value + out[end:]
    return out


def cell_text(subspace: Subspace, coords: tuple[int, ...]) -> str:
    """Prompt text for a (possibly prefix-length) coordinate tuple.

    Dimensions not covered by ``coords`` keep their original base text.
    """
    slots = [(f.start, f.end, f.value) for f in subspace.fixed]
    for dim, c in zip(subspace.dimensions, coords):
        ph = subspace.placeholder_for(dim.dimension_id)
        slots.append((ph.start, ph.end, dim.values[c]))
    return _render(subspace.template.base_text, slots)


def instantiate(subspace: Subspace) -> list[Cell]:
    """All cells of the Cartesian product, last dimension varying fastest.

    Pure: identical subspace definitions give identical cell lists. Records
    start as drafts carrying the subspace's base generation params.
    """
    coords_list: list[tuple[int, ...]] = [()]
    for dim in subspace.dimensions:
        coords_list = [c + (i,) for c in coords_list for i in range(len(dim.values))]
    cells = []
    for coords in coords_list:
        text = cell_text(subspace, coords)
        cells.append(Cell(coords=coords, prompt_text=text,
                          record=PromptRecord(text=text, params=subspace.base_params.copy())))
    return cells


def rebuild_cells(subspace: Subspace) -> None:
    """Re-instantiate, keeping records whose prompt text is unchanged."""
    old_by_text = {c.record.text: c.record for c in subspace.cells.values()}
    fresh = instantiate(subspace)
    subspace.cells = {}
    for cell in fresh:
        kept = old_by_text.get(cell.prompt_text) or subspace.generated.get(cell.prompt_text)
        if kept is not None:
            cell.record = kept
        subspace.cells[cell.coords] = cell


def cell_at(node: Node, coords: tuple[int, ...]) -> Cell:
    if node.kind != "subspace":
        raise UnknownCell(f"node {node.node_id} is not a subspace")
    cell = node.payload.cells.get(tuple(coords))
    if cell is None:
        raise UnknownCell(f"no cell at {coords}")
    return cell


# ----------------------------------------------------------------------
# dimension definition and editing


def _check_span(subspace: Subspace, start: int, end: int) -> None:
    base = subspace.template.base_text
    if not (0 <= start < end <= len(base)):
        raise EmptySpan(f"span ({start}, {end}) is empty or out of bounds")
    taken = [(ph.start, ph.end) for ph in subspace.template.placeholders]
    taken += [(f.start, f.end) for f in subspace.fixed]
    for s, e in taken:
        if start < e and s < end:
            raise OverlappingSpan(f"span ({start}, {end}) overlaps ({s}, {e})")


def _check_values(values: list[str]) -> None:
    for v in values:
        if not v:
            raise EmptyValue("dimension values must be non-empty")
    if len(set(values)) != len(values):
        raise DuplicateValue(f"duplicate dimension value in {values}")


def define_dimension(session: Session, node_id: str, span: tuple[int, int], name: str,
                     extra_values: list[str] | None = None, *,
                     _dimension_id: str | None = None, _at: int | None = None) -> Node:
    """Bind a text span as a new dimension; the selected text is value 0.

    A committed prompt node converts to a subspace node in place (same id,
    children untouched); its generated images carry over to the matching
    cell. On an existing subspace node this adds another dimension.
    """
    node = session.node(node_id)
    at = now_ms() if _at is None else _at
    start, end = int(span[0]), int(span[1])

    # validate everything before touching state: a rejected call must not
    # leave a half-converted node behind
    if node.kind == "prompt":
        if node.form == "input":
            raise NotCommitted("define dimensions on a committed prompt, not a draft")
        target = Subspace(template=Template(base_text=node.record.text))
    else:
        target = node.payload
    _check_span(target, start, end)
    values = [target.template.base_text[start:end], *(extra_values or [])]
    _check_values(values)

    if node.kind == "prompt":
        record = node.record
        sub = Subspace(template=Template(base_text=record.text),
                       base_params=record.params.copy())
        if record.status in ("pending", "complete"):
            # keep the record object itself: an in-flight generation will
            # deliver into it through the matching cell
            sub.generated[record.text] = record
        node.kind = "subspace"
        node.form = None
        node.payload = sub
        log_event(session, "create_subspace_node", node_id, {"mode": "convert"}, at=at)
    sub = node.payload
    dim = Dimension(
        dimension_id=_dimension_id or new_id(),
        name=name,
        color_index=(len(sub.fixed) + len(sub.dimensions)) % PALETTE_SLOTS,
        values=values,
    )
    sub.dimensions.append(dim)
    sub.template.placeholders.append(Placeholder(start, end, dim.dimension_id))
    sub.template.placeholders.sort(key=lambda ph: ph.start)
    rebuild_cells(sub)
    log_event(session, "create_dimension", node_id,
              {"dimension_id": dim.dimension_id, "name": name, "start": start, "end": end,
               "value0": values[0], "via": "define"}, at=at)
    for v in values[1:]:
        log_event(session, "create_value", node_id,
                  {"dimension_id": dim.dimension_id, "value": v, "via": "define"}, at=at)
    return node


def edit_dimension(session: Session, node_id: str, edit: str,
                   dimension_id: str | None = None, value: str | None = None,
                   name: str | None = None, order: list[int] | None = None, *,
                   _at: int | None = None) -> Node:
    """Apply one dimension edit: add_value, remove_value, rename,
    reorder_values, or reorder_dimensions."""
    node = session.node(node_id)
    if node.kind != "subspace":
        raise UnknownDimension(f"node {node_id} has no dimensions")
    sub: Subspace = node.payload
    at = now_ms() if _at is None else _at

    if edit == "add_value":
        dim = sub.dimension(dimension_id)
        if not value:
            raise EmptyValue("value must be non-empty")
        if value in dim.values:
            raise DuplicateValue(f"value {value!r} already present")
        dim.values.append(value)
        rebuild_cells(sub)
        log_event(session, "create_value", node_id,
                  {"dimension_id": dim.dimension_id, "value": value, "via": "edit"}, at=at)
        return node

    if edit == "remove_value":
        dim = sub.dimension(dimension_id)
        if value not in dim.values:
            raise UnknownValue(f"no value {value!r}")
        if len(dim.values) == 1:
            raise LastValueRemoval("a dimension needs at least one value")
        dim.values.remove(value)
    elif edit == "rename":
        dim = sub.dimension(dimension_id)
        if not name:
            raise EmptyValue("name must be non-empty")
        dim.name = name
    elif edit == "reorder_values":
        dim = sub.dimension(dimension_id)
        if order is None or sorted(order) != list(range(len(dim.values))):
            raise InvalidParams("order must be a permutation of the value indices")
        dim.values = [dim.values[i] for i in order]
    elif edit == "reorder_dimensions":
        if order is None or sorted(order) != list(range(len(sub.dimensions))):
            raise InvalidParams("order must be a permutation of the dimension indices")
        sub.dimensions = [sub.dimensions[i] for i in order]
    else:
        raise InvalidParams(f"unknown edit {edit!r}")

    rebuild_cells(sub)
    log_event(session, "edit_dimension", node_id,
              {"edit": edit, "dimension_id": dimension_id, "value": value,
               "name": name, "order": order}, at=at)
    return node


# ----------------------------------------------------------------------
# cell generation round trip


def commit_cell(session: Session, node_id: str, coords: tuple[int, ...], *,
                _at: int | None = None) -> PromptRecord:
    """Request generation for one cell: its record goes pending."""
    node = session.node(node_id)
    cell = cell_at(node, coords)
    if cell.record.status == "pending":
        raise NotPending(f"cell {coords} already has a generation in flight")
    cell.record.status = "pending"
    cell.record.images = []
    log_event(session, "generate", node_id,
              {"coords": list(coords), "text": cell.prompt_text,
               "params": params_to_dict(cell.record.params)}, at=_at)
    return cell.record


def attach_cell_images(session: Session, node_id: str, coords: tuple[int, ...],
                       images: list[bytes]) -> None:
    node = session.node(node_id)
    cell = cell_at(node, tuple(coords))
    record = cell.record
    if record.status != "pending":
        raise NotPending(f"cell {coords} is not awaiting images")
    if len(images) != record.params.image_count:
        raise WrongImageCount(
            f"expected {record.params.image_count} images, got {len(images)}")
    record.images = [store_blob(session, data) for data in images]
    record.status = "complete"
    node.payload.generated[record.text] = record


def _pending_slot(node: Node, text: str,
                  coords_hint: tuple[int, ...] | None) -> PromptRecord | None:
    """The pending record a generation result for ``text`` belongs to.

    Prefers the submitting coords, falls back to a text match (dimension
    edits may have remapped coords while the job ran), then to the
    generated cache (the cell may have been edited away entirely).
    """
    sub: Subspace = node.payload
    if coords_hint is not None:
        cell = sub.cells.get(tuple(coords_hint))
        if cell is not None and cell.record.text == text and cell.record.status == "pending":
            return cell.record
    for cell in sub.cells.values():
        if cell.record.text == text and cell.record.status == "pending":
            return cell.record
    cached = sub.generated.get(text)
    if cached is not None and cached.status == "pending":
        return cached
    return None


def deliver_images(session: Session, node_id: str, text: str, images: list[bytes],
                   coords_hint: tuple[int, ...] | None = None) -> bool:
    """Attach asynchronous generation output where it now belongs.

    The prompt text is the routing key: results for text the node no
    longer wants (a cancelled-and-recommitted prompt, a removed value)
    are dropped. Returns False for such stale deliveries.
    """
    node = session.node(node_id)
    if node.kind == "prompt":
        record = node.record
        if record.status != "pending" or record.text != text:
            return False
        graph.attach_images(session, node_id, images)
        return True
    record = _pending_slot(node, text, coords_hint)
    if record is None:
        return False
    if len(images) != record.params.image_count:
        raise WrongImageCount(
            f"expected {record.params.image_count} images, got {len(images)}")
    record.images = [store_blob(session, data) for data in images]
    record.status = "complete"
    node.payload.generated[text] = record
    return True


def resolve_failed_generation(session: Session, node_id: str, text: str,
                              coords_hint: tuple[int, ...] | None = None, *,
                              cancelled: bool, message: str = "") -> bool:
    """Roll back or fail the slot a dead generation was feeding."""
    node = session.node(node_id)
    if node.kind == "prompt":
        record = node.record
        if record.status != "pending" or record.text != text:
            return False
        if cancelled:
            graph.revert_to_draft(session, node_id)
        else:
            graph.mark_generation_failed(session, node_id, message)
        return True
    record = _pending_slot(node, text, coords_hint)
    if record is None:
        return False
    record.status = "draft" if cancelled else "failed"
    return True


def mark_cell_image(session: Session, node_id: str, coords: tuple[int, ...],
                    image_index: int, mark: str, *, _at: int | None = None) -> float:
    node = session.node(node_id)
    cell = cell_at(node, tuple(coords))
    if mark not in graph.MARK_WEIGHTS:
        raise InvalidParams(f"unknown mark {mark!r}")
    if not 0 <= image_index < len(cell.record.images):
        raise IndexOutOfRange(f"image index {image_index} out of range")
    cell.record.images[image_index].mark = mark
    log_event(session, "mark_image", node_id,
              {"coords": list(coords), "image_index": image_index, "mark": mark}, at=_at)
    return graph.node_score(node)


# ----------------------------------------------------------------------
# extraction and expansion


def extract_cell(session: Session, node_id: str, coords: tuple[int, ...],
                 position: tuple[float, float] | None = None, *,
                 _node_id: str | None = None, _at: int | None = None) -> str:
    """Drag a cell out as a child subspace node with the cell's values fixed.

    ``coords`` may cover only the leading dimensions (a whole outer grid
    cell); covered dimensions become fixed assignments, the rest are
    dropped back to their original text. The child starts with no active
    dimensions, so its base instantiation equals the extracted cell text.
    """
    node = session.node(node_id)
    if node.kind != "subspace":
        raise UnknownCell(f"node {node_id} is not a subspace")
    sub: Subspace = node.payload
    coords = tuple(int(c) for c in coords)
    if not 1 <= len(coords) <= len(sub.dimensions):
        raise UnknownCell(f"coords {coords} do not address a cell")
    for dim, c in zip(sub.dimensions, coords):
        if not 0 <= c < len(dim.values):
            raise UnknownCell(f"coords {coords} out of range for {dim.name}")

    fixed = [FixedAssignment(f.name, f.value, f.start, f.end, f.color_index) for f in sub.fixed]
    for dim, c in zip(sub.dimensions, coords):
        ph = sub.placeholder_for(dim.dimension_id)
        fixed.append(FixedAssignment(dim.name, dim.values[c], ph.start, ph.end, dim.color_index))
    child_sub = Subspace(
        template=Template(base_text=sub.template.base_text),
        fixed=fixed,
        base_params=sub.base_params.copy(),
    )
    base_text = child_sub.base_text_with_fixed()
    source_record = None
    if len(coords) == len(sub.dimensions):
        cell = cell_at(node, coords)
        if cell.record.images:
            source_record = cell.record.copy()
    if source_record is None:
        cached = sub.generated.get(base_text)
        if cached is not None:
            source_record = cached.copy()
    if source_record is not None:
        child_sub.generated[source_record.text] = source_record
    rebuild_cells(child_sub)

    pos = position if position is not None else default_child_position(node)
    child = Node(
        node_id=_node_id or new_id(),
        kind="subspace",
        parent_id=node_id,
        position=(float(pos[0]), float(pos[1])),
        created_at=now_ms() if _at is None else _at,
        payload=child_sub,
    )
    session.nodes.append(child)
    log_event(session, "extract_cell", node_id,
              {"child_id": child.node_id, "coords": list(coords),
               "x": child.position[0], "y": child.position[1]}, at=child.created_at)
    return child.node_id


def gray_order(radices: list[int]) -> list[tuple[int, ...]]:
    """Reflected mixed-radix Gray sequence: every tuple once, one digit
    changing by +-1 between neighbors."""
    return _kernels.gray_codes(radices)


def expand_chain(session: Session, node_id: str, *,
                 _node_ids: list[str] | None = None, _at: int | None = None) -> list[str]:
    """Expand a subspace into a linear chain of prompt nodes.

    The chain visits every cell exactly once in Gray order, so consecutive
    nodes differ in exactly one dimension value. Cells that already have
    images transfer them; the rest are created pending generation.
    """
    node = session.node(node_id)
    if node.kind != "subspace" or not node.payload.dimensions:
        raise NoDimensions(f"node {node_id} has no dimensions to expand")
    sub: Subspace = node.payload
    order = gray_order(sub.radices())
    prev = node
    ids: list[str] = []
    for idx, coords in enumerate(order):
        cell = sub.cells[coords]
        record = PromptRecord(text=cell.prompt_text, params=sub.base_params.copy())
        if cell.record.images:
            record.images = [img.copy() for img in cell.record.images]
            record.status = "complete"
        else:
            record.status = "pending"
        pos = default_child_position(prev)
        child = Node(
            node_id=_node_ids[idx] if _node_ids else new_id(),
            kind="prompt",
            parent_id=prev.node_id,
            position=pos,
            created_at=now_ms() if _at is None else _at,
            form="prompt",
            payload=record,
        )
        session.nodes.append(child)
        graph._recompute_diff(session, child)
        log_event(session, "create_prompt_node", child.node_id,
                  {"form": "prompt", "parent_id": prev.node_id, "x": pos[0], "y": pos[1],
                   "text": record.text, "params": params_to_dict(record.params),
                   "expanded_from": node_id, "coords": list(coords)}, at=child.created_at)
        ids.append(child.node_id)
        prev = child
    return ids


# ----------------------------------------------------------------------
# grouping prompts into a subspace


def _common_prefix(texts: list[str]) -> str:
    first = min(texts, key=len)
    for i in range(len(first)):
        ch = first[i]
        if any(t[i] != ch for t in texts):
            return first[:i]
    return first


def _common_suffix(texts: list[str]) -> str:
    first = min(texts, key=len)
    for i in range(len(first)):
        ch = first[len(first) - 1 - i]
        if any(t[len(t) - 1 - i] != ch for t in texts):
            return first[len(first) - i:]
    return first


def infer_group(prompt_texts: list[str]) -> tuple[Template, Dimension]:
    """Recover a one-dimension template from texts that differ in one segment.

    The template is the common prefix and suffix; the middles become the
    dimension values in input order. Fails if any middle is empty or two
    middles coincide.
    """
    texts = list(prompt_texts)
    if len(texts) < 2:
        raise TooFewPrompts("need at least two prompts to group")
    prefix = _common_prefix(texts)
    suffix = _common_suffix(texts)
    # Never let prefix and suffix overlap within the shortest text.
    max_suffix = min(len(t) for t in texts) - len(prefix)
    if len(suffix) > max_suffix:
        suffix = suffix[len(suffix) - max_suffix:] if max_suffix > 0 else ""
    middles = [t[len(prefix):len(t) - len(suffix)] for t in texts]
    if any(not m for m in middles):
        raise NotSingleDimension("a grouped prompt has no varying segment")
    if len(set(middles)) != len(middles):
        raise NotSingleDimension("two grouped prompts share the same varying segment")
    dim = Dimension(dimension_id=new_id(), name="group", color_index=0, values=middles)
    template = Template(
        base_text=texts[0],
        placeholders=[Placeholder(len(prefix), len(texts[0]) - len(suffix), dim.dimension_id)],
    )
    return template, dim


def create_group_subspace(session: Session, node_ids: list[str], name: str = "group",
                          position: tuple[float, float] | None = None, *,
                          _node_id: str | None = None, _dimension_id: str | None = None,
                          _at: int | None = None) -> str:
    """Group committed prompt nodes whose texts differ in a single segment.

    The originals stay in place; the new subspace node is added as a
    sibling (same parent as the first grouped node).
    """
    nodes = [session.node(i) for i in node_ids]
    if len(nodes) < 2:
        raise TooFewPrompts("need at least two nodes to group")
    for n in nodes:
        if n.kind != "prompt" or n.form == "input":
            raise NotCommitted(f"node {n.node_id} is not a committed prompt")
    texts = [n.record.text for n in nodes]
    template, dim = infer_group(texts)
    dim.name = name
    if _dimension_id is not None:
        dim.dimension_id = _dimension_id
        template.placeholders[0].dimension_id = _dimension_id
    sub = Subspace(template=template, dimensions=[dim],
                   base_params=nodes[0].record.params.copy())
    for n in nodes:
        if n.record.status == "complete":
            sub.generated[n.record.text] = n.record.copy()
    rebuild_cells(sub)
    pos = position if position is not None else default_child_position(nodes[0])
    at = now_ms() if _at is None else _at
    node = Node(
        node_id=_node_id or new_id(),
        kind="subspace",
        parent_id=nodes[0].parent_id,
        position=(float(pos[0]), float(pos[1])),
        created_at=at,
        payload=sub,
    )
    session.nodes.append(node)
    log_event(session, "create_subspace_node", node.node_id,
              {"mode": "group", "member_ids": list(node_ids), "name": name,
               "dimension_id": dim.dimension_id, "parent_id": node.parent_id,
               "x": node.position[0], "y": node.position[1]},
              at=at)
    log_event(session, "create_dimension", node.node_id,
              {"dimension_id": dim.dimension_id, "name": name,
               "start": template.placeholders[0].start, "end": template.placeholders[0].end,
               "value0": dim.values[0], "via": "group"}, at=at)
    for v in dim.values[1:]:
        log_event(session, "create_value", node.node_id,
                  {"dimension_id": dim.dimension_id, "value": v, "via": "group"}, at=at)
    return node.node_id
