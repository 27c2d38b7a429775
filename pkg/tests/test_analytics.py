"""Metrics definitions, the activity histogram, and event-log replay."""

from __future__ import annotations

import random

import pytest

from promptmap import analytics, graph, store, subspace
from promptmap.errors import EmptyLog, InvalidParams
from promptmap.graph import Event, Node, PromptRecord, Session
from promptmap.subspace import Subspace, Template
from conftest import build_random_session


def synthetic_session(kinds: str) -> Session:
    """Nodes with the given creation-order kinds, e.g. ``"PPSPPPS"``."""
    s = graph.create_session()
    for i, k in enumerate(kinds):
        if k == "P":
            node = Node(f"n{i}", "prompt", None, (0.0, 0.0), 1000 + i,
                        form="prompt", payload=PromptRecord(text=f"t{i}"))
        else:
            node = Node(f"n{i}", "subspace", None, (0.0, 0.0), 1000 + i,
                        payload=Subspace(template=Template(base_text=f"t{i}")))
        s.nodes.append(node)
    return s


def add_events(s: Session, specs: list[tuple[int, str]]) -> None:
    for at, kind in specs:
        s.events.append(Event(at=at, kind=kind, node_id="n0"))


def test_marker_gaps_single_gap():
    gaps, markers = analytics.marker_gaps(list("PPSPPPS".replace("P", "prompt ").split()))
    # direct form: P P S P P P S -> one gap of 3
    gaps, markers = analytics.marker_gaps(
        ["prompt", "prompt", "subspace", "prompt", "prompt", "prompt", "subspace"])
    assert (gaps, markers) == ([3], 2)


def test_marker_collapse_and_undefined_mean():
    m = analytics.compute_metrics(synthetic_session("PSSP"))
    assert m.mean_defined is False
    assert m.mean_prompts_between_subspaces == 0.0
    assert m.subspace_proportion == 0.5


def test_acceptance_log_shape():
    # P P S P P P S S P P: markers collapse to 2, one gap of 3
    m = analytics.compute_metrics(synthetic_session("PPSPPPSSPP"))
    assert m.mean_defined is True
    assert m.mean_prompts_between_subspaces == 3.0
    assert m.subspace_proportion == 3 / 10


def test_collapse_is_idempotent():
    kinds = ["prompt", "subspace", "subspace", "prompt", "subspace"]
    collapsed = ["prompt", "subspace", "prompt", "subspace"]
    assert analytics.marker_gaps(kinds) == analytics.marker_gaps(collapsed)


def test_leading_and_trailing_runs_excluded():
    m = analytics.compute_metrics(synthetic_session("PPPSPSPPPP"))
    # gaps strictly between markers: just the single P between the two S
    assert m.mean_prompts_between_subspaces == 1.0


def test_proportion_example():
    m = analytics.compute_metrics(synthetic_session("SS" + "P" * 8))
    assert m.subspace_proportion == 0.2


def test_metrics_ignore_positions_and_curation(rng):
    s = build_random_session(rng, n_ops=30)
    before = analytics.compute_metrics(s)
    for node in s.nodes:
        graph.move_node(s, node.node_id, (123.0, 456.0))
        graph.set_node_flag(s, node.node_id, "pinned", True)
    after = analytics.compute_metrics(s)
    assert after.mean_prompts_between_subspaces == before.mean_prompts_between_subspaces
    assert after.subspace_proportion == before.subspace_proportion
    assert after.mean_defined == before.mean_defined


def test_histogram_bins():
    s = synthetic_session("P")
    add_events(s, [(0, "generate"), (30_000, "generate"), (90_000, "mark_image")])
    hist = analytics.activity_histogram(s, 60)
    assert len(hist) == 2
    assert hist[0][0] == 0 and hist[1][0] == 60_000
    assert sum(hist[0][1].values()) == 2
    assert sum(hist[1][1].values()) == 1
    assert hist[1][1] == {"mark_image": 1}


def test_histogram_conservation(rng):
    s = build_random_session(rng, n_ops=25)
    hist = analytics.activity_histogram(s, 1)
    totals: dict[str, int] = {}
    for _, counts in hist:
        for kind, n in counts.items():
            totals[kind] = totals.get(kind, 0) + n
    expected: dict[str, int] = {}
    for ev in s.events:
        expected[ev.kind] = expected.get(ev.kind, 0) + 1
    assert totals == expected


def test_histogram_errors():
    with pytest.raises(EmptyLog):
        analytics.activity_histogram(synthetic_session("P"), 60)
    s = synthetic_session("P")
    add_events(s, [(0, "generate")])
    with pytest.raises(InvalidParams):
        analytics.activity_histogram(s, 0)


def test_activity_counts_match_taxonomy(rng):
    s = build_random_session(rng, n_ops=40)
    m = analytics.compute_metrics(s)
    for kind in analytics.ANALYTIC_KINDS:
        assert m.activity_counts.get(kind, 0) >= 0
    assert m.activity_counts.get("create_prompt_node", 0) > 0


# ----------------------------------------------------------------------
# replay audit


def strip_variable(doc: dict) -> dict:
    doc = dict(doc)
    doc.pop("events", None)
    session = dict(doc["session"])
    session.pop("viewport", None)
    doc["session"] = session
    return doc


@pytest.mark.parametrize("seed", [1, 7, 99])
def test_replay_reconstructs_equivalent_state(seed):
    s = build_random_session(random.Random(seed), n_ops=35, attach_prob=1.0)
    replayed = analytics.replay_events(s.events, session_id=s.session_id,
                                       created_at=s.created_at)
    assert strip_variable(store.session_to_document(s)) == \
        strip_variable(store.session_to_document(replayed))
    assert s.blobs == replayed.blobs


def test_replay_handles_cancel_rollback():
    s = graph.create_session()
    nid = graph.add_root_input(s, (0.0, 0.0))
    graph.commit_input(s, nid, "first try", graph.GenParams(image_count=1, width=16, height=16))
    graph.revert_to_draft(s, nid)  # cancellation leaves no event
    record = graph.commit_input(s, nid, "second try",
                                graph.GenParams(image_count=1, width=16, height=16))
    from promptmap.mockgen import mock_generate

    graph.attach_images(s, nid, mock_generate(record.text, record.params))
    replayed = analytics.replay_events(s.events, session_id=s.session_id,
                                       created_at=s.created_at)
    node = replayed.node(nid)
    assert node.record.text == "second try"
    assert node.record.status == "complete"
