"""Exploration-pattern analytics over the session event log.

The four creative activity kinds (creating prompt nodes, subspace nodes,
dimensions, and values) come straight from the event log. Gap statistics
work on node creation order: runs of consecutive subspace nodes collapse
into one marker, and only prompt runs strictly between two markers count.

``replay_events`` rebuilds a session from its event log alone, which is
the audit path proving the log captures every state-bearing mutation.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable

from . import graph, subspace
from .errors import EmptyLog, InvalidParams
from .graph import Event, Session
from .mockgen import mock_generate

ANALYTIC_KINDS = ("create_prompt_node", "create_subspace_node",
                  "create_dimension", "create_value")


@dataclass
class Metrics:
    activity_counts: dict[str, int]
    mean_prompts_between_subspaces: float
    mean_defined: bool  # False when fewer than two collapsed markers exist
    subspace_proportion: float
    histogram: list[tuple[int, dict[str, int]]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "activity_counts": dict(self.activity_counts),
            "mean_prompts_between_subspaces": self.mean_prompts_between_subspaces,
            "mean_defined": self.mean_defined,
            "subspace_proportion": self.subspace_proportion,
            "histogram": [
                {"bin_start": start, "counts": dict(counts)}
                for start, counts in self.histogram
            ],
        }


def marker_gaps(kinds: list[str]) -> tuple[list[int], int]:
    """Prompt counts in gaps strictly between collapsed subspace markers.

    Returns (gaps, marker_count). Collapsing is idempotent: a run of
    consecutive subspace nodes is one marker.
    """
    gaps: list[int] = []
    markers = 0
    count = 0
    prev_subspace = False
    for kind in kinds:
        if kind == "subspace":
            if not prev_subspace:
                if markers > 0:
                    gaps.append(count)
                markers += 1
                count = 0
                prev_subspace = True
        else:
            prev_subspace = False
            if markers > 0:
                count += 1
    return gaps, markers


def compute_metrics(session: Session, bin_width_seconds: int = 60) -> Metrics:
    kinds = [n.kind for n in session.nodes]
    gaps, markers = marker_gaps(kinds)
    defined = markers >= 2
    mean = sum(gaps) / len(gaps) if defined and gaps else 0.0
    proportion = kinds.count("subspace") / len(kinds) if kinds else 0.0
    histogram = activity_histogram(session, bin_width_seconds) if session.events else []
    return Metrics(
        activity_counts=dict(Counter(ev.kind for ev in session.events)),
        mean_prompts_between_subspaces=mean,
        mean_defined=defined,
        subspace_proportion=proportion,
        histogram=histogram,
    )


def activity_histogram(session: Session,
                       bin_width_seconds: int) -> list[tuple[int, dict[str, int]]]:
    """Per-kind event counts in fixed-width bins from first to last event."""
    if bin_width_seconds < 1:
        raise InvalidParams("bin width must be at least one second")
    if not session.events:
        raise EmptyLog("session has no events")
    width = int(bin_width_seconds) * 1000
    first = min(ev.at for ev in session.events)
    last = max(ev.at for ev in session.events)
    n_bins = (last - first) // width + 1
    bins: list[tuple[int, dict[str, int]]] = [
        (first + i * width, {}) for i in range(n_bins)
    ]
    for ev in session.events:
        _, counts = bins[(ev.at - first) // width]
        counts[ev.kind] = counts.get(ev.kind, 0) + 1
    return bins


# ----------------------------------------------------------------------
# event replay


def replay_events(events: list[Event],
                  image_provider: Callable[[str, graph.GenParams], list[bytes]] | None = None,
                  session_id: str | None = None,
                  created_at: int | None = None) -> Session:
    """Rebuild a session from its event log.

    Generation events are completed synchronously through
    ``image_provider`` (the deterministic mock by default), so a session
    whose images came from the mock backend replays to identical blobs.
    Cancelled generations leave no event, so they replay as completed.
    """
    provider = image_provider or mock_generate
    s = graph.create_session()
    if session_id is not None:
        s.session_id = session_id
    if created_at is not None:
        s.created_at = created_at
    for ev in events:
        p = ev.payload
        nid = ev.node_id
        kind = ev.kind
        if kind == "create_prompt_node":
            if p.get("form") == "input":
                if p.get("parent_id") is None:
                    graph.add_root_input(s, (p["x"], p["y"]), _node_id=nid, _at=ev.at)
                else:
                    graph.fork_node(s, p["parent_id"], (p["x"], p["y"]),
                                    _node_id=nid, _at=ev.at)
            else:
                _replay_expanded_node(s, ev)
        elif kind == "generate":
            params = graph.params_from_dict(p["params"])
            if p.get("coords") is not None:
                coords = tuple(p["coords"])
                subspace.commit_cell(s, nid, coords, _at=ev.at)
                subspace.attach_cell_images(s, nid, coords, provider(p["text"], params))
            else:
                node = s.node(nid)
                if node.form != "input":
                    # a cancelled commit was rolled back without an event
                    node.form = "input"
                    node.record.status = "draft"
                graph.commit_input(s, nid, p["text"], params, _at=ev.at)
                graph.attach_images(s, nid, provider(p["text"], params))
        elif kind == "create_subspace_node":
            if p.get("mode") == "group":
                subspace.create_group_subspace(s, p["member_ids"], p.get("name", "group"),
                                               (p["x"], p["y"]), _node_id=nid,
                                               _dimension_id=p.get("dimension_id"), _at=ev.at)
            # mode "convert" happens as a side effect of create_dimension
        elif kind == "create_dimension":
            if p.get("via") != "group":
                subspace.define_dimension(s, nid, (p["start"], p["end"]), p["name"], [],
                                          _dimension_id=p["dimension_id"], _at=ev.at)
        elif kind == "create_value":
            if p.get("via") != "group":
                subspace.edit_dimension(s, nid, "add_value", p["dimension_id"], p["value"],
                                        _at=ev.at)
        elif kind == "edit_dimension":
            subspace.edit_dimension(s, nid, p["edit"], p.get("dimension_id"),
                                    p.get("value"), p.get("name"), p.get("order"), _at=ev.at)
        elif kind == "mark_image":
            if p.get("coords") is not None:
                subspace.mark_cell_image(s, nid, tuple(p["coords"]), p["image_index"],
                                         p["mark"], _at=ev.at)
            else:
                graph.mark_image(s, nid, p["image_index"], p["mark"], _at=ev.at)
        elif kind == "pin":
            graph.set_node_flag(s, nid, "pinned", p["value"], _at=ev.at)
        elif kind == "minimize":
            graph.set_node_flag(s, nid, "minimized", p["value"], _at=ev.at)
        elif kind == "move":
            graph.move_node(s, nid, (p["x"], p["y"]), _at=ev.at)
        elif kind == "extract_image":
            coords = tuple(p["coords"]) if p.get("coords") is not None else None
            graph.extract_image(s, nid, p["image_index"], (p["x"], p["y"]), coords,
                                _node_id=p["child_id"], _at=ev.at)
        elif kind == "extract_cell":
            subspace.extract_cell(s, nid, tuple(p["coords"]), (p["x"], p["y"]),
                                  _node_id=p["child_id"], _at=ev.at)
    return s


def _replay_expanded_node(s: Session, ev: Event) -> None:
    """Recreate one prompt-form node of an expansion chain."""
    p = ev.payload
    record = graph.PromptRecord(text=p["text"], params=graph.params_from_dict(p["params"]))
    source = s.node(p["expanded_from"])
    cell = source.payload.cells.get(tuple(p["coords"]))
    if cell is not None and cell.record.images:
        record.images = [img.copy() for img in cell.record.images]
        record.status = "complete"
    else:
        record.status = "pending"
    node = graph.Node(
        node_id=ev.node_id,
        kind="prompt",
        parent_id=p["parent_id"],
        position=(p["x"], p["y"]),
        created_at=ev.at,
        form="prompt",
        payload=record,
    )
    s.nodes.append(node)
    graph._recompute_diff(s, node)
    graph.log_event(s, "create_prompt_node", node.node_id, dict(p), at=ev.at)
