"""Session and node lifecycle, curation, and mini-map derivation."""

from __future__ import annotations

import math
import random
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from promptmap import graph, mockgen
from promptmap.errors import (
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
from conftest import committed_node, small_params


def test_create_session_initial_state():
    s = graph.create_session()
    assert s.nodes == []
    assert (s.viewport.pan_x, s.viewport.pan_y, s.viewport.zoom) == (0.0, 0.0, 1.0)
    now = time.time() * 1000
    assert now - 1000 <= s.created_at <= now


def test_session_ids_unique():
    assert graph.create_session().session_id != graph.create_session().session_id


def test_add_root_input_defaults():
    s = graph.create_session()
    nid = graph.add_root_input(s, (3.0, 4.0))
    node = s.node(nid)
    assert node.form == "input" and node.parent_id is None
    assert node.record.status == "draft" and node.record.text == ""
    # defaults echo the module configuration
    assert node.record.params == graph.GenParams()
    assert node.record.params.image_count == graph.DEFAULT_IMAGE_COUNT == 4
    assert node.record.params.width == node.record.params.height == graph.DEFAULT_IMAGE_SIZE
    assert len(s.nodes) == 1


def test_fork_copies_text_and_params():
    s = graph.create_session()
    nid = committed_node(s, "a pig in Disney style",
                         graph.GenParams(image_count=4, seed=7, width=32, height=32))
    fid = graph.fork_node(s, nid)
    child = s.node(fid)
    assert child.form == "input" and child.parent_id == nid
    assert child.record.text == "a pig in Disney style"
    assert child.record.params.image_count == 4 and child.record.params.seed == 7
    assert child.record.status == "draft"
    # deep copy: editing the fork leaves the source untouched
    child.record.params.seed = 99
    assert s.node(nid).record.params.seed == 7


def test_fork_rejects_draft_and_unknown():
    s = graph.create_session()
    nid = graph.add_root_input(s)
    with pytest.raises(ForkFromDraft):
        graph.fork_node(s, nid)
    with pytest.raises(UnknownNode):
        graph.fork_node(s, "nope")


def test_commit_transitions_and_diff():
    s = graph.create_session()
    nid = graph.add_root_input(s)
    record = graph.commit_input(s, nid, "a pig in Disney style", small_params())
    node = s.node(nid)
    assert node.form == "prompt" and record.status == "pending"
    assert [sp.kind for sp in node.diff] == ["insert"]  # full insert vs no parent
    with pytest.raises(NotInputForm):
        graph.commit_input(s, nid, "again")
    with pytest.raises(EmptyPrompt):
        graph.commit_input(s, graph.add_root_input(s), "   ")


def test_attach_images_round_trip():
    s = graph.create_session()
    nid = graph.add_root_input(s)
    record = graph.commit_input(s, nid, "a pig", small_params())
    blobs = mockgen.mock_generate("a pig", record.params)
    graph.attach_images(s, nid, blobs)
    assert record.status == "complete"
    assert [i.mark for i in record.images] == ["neutral"] * record.params.image_count
    assert all(i.content_hash in s.blobs for i in record.images)
    with pytest.raises(NotPending):
        graph.attach_images(s, nid, blobs)


def test_attach_wrong_count():
    s = graph.create_session()
    nid = graph.add_root_input(s)
    record = graph.commit_input(s, nid, "a pig", graph.GenParams(image_count=4, width=16, height=16))
    blobs = mockgen.mock_generate("a pig", record.params)
    with pytest.raises(WrongImageCount):
        graph.attach_images(s, nid, blobs[:3])


def test_extract_image_references_same_blob():
    s = graph.create_session()
    nid = committed_node(s, "a pig in Disney style")
    source = s.node(nid).record
    cid = graph.extract_image(s, nid, 1, (10.0, 20.0))
    child = s.node(cid)
    assert child.form == "image" and child.parent_id == nid
    assert len(child.record.images) == 1
    assert child.record.images[0].content_hash == source.images[1].content_hash
    assert child.record.text == source.text
    assert child.record.status == "complete"


def test_extract_image_errors():
    s = graph.create_session()
    nid = graph.add_root_input(s)
    graph.commit_input(s, nid, "a pig", small_params())
    with pytest.raises(SourceIncomplete):
        graph.extract_image(s, nid, 0)
    graph.attach_images(s, nid, mockgen.mock_generate("a pig", s.node(nid).record.params))
    with pytest.raises(IndexOutOfRange):
        graph.extract_image(s, nid, 99)


def test_mark_image_scores():
    s = graph.create_session()
    nid = committed_node(s, "a pig", graph.GenParams(image_count=4, width=16, height=16))
    assert graph.mark_image(s, nid, 0, "like") == 0.25
    assert graph.mark_image(s, nid, 1, "like") == 0.5
    score = graph.mark_image(s, nid, 2, "dislike")
    assert score == pytest.approx((2 - 1) / 4)
    # re-marking recomputes idempotently
    assert graph.mark_image(s, nid, 0, "neutral") == 0.0
    assert graph.mark_image(s, nid, 0, "like") == 0.25


def test_flags_round_trip_and_independence():
    s = graph.create_session()
    nid = committed_node(s, "a pig")
    graph.set_node_flag(s, nid, "pinned", True)
    graph.set_node_flag(s, nid, "minimized", True)
    node = s.node(nid)
    assert node.pinned and node.minimized  # flags do not couple
    assert node.record.images  # minimize is lossless
    graph.set_node_flag(s, nid, "pinned", False)
    assert not node.pinned and node.minimized


def test_move_node():
    s = graph.create_session()
    nid = graph.add_root_input(s)
    graph.move_node(s, nid, (120.5, -40.0))
    assert s.node(nid).position == (120.5, -40.0)
    with pytest.raises(NonFinitePosition):
        graph.move_node(s, nid, (math.nan, 0.0))
    with pytest.raises(NonFinitePosition):
        graph.move_node(s, nid, (0.0, math.inf))


def test_default_child_placement():
    s = graph.create_session()
    nid = committed_node(s, "a pig")
    graph.move_node(s, nid, (100.0, 50.0))
    fid = graph.fork_node(s, nid)
    assert s.node(fid).position == (100.0, 50.0 + graph.NODE_HEIGHT + graph.CHILD_GAP)
    assert graph.CHILD_GAP == 40.0


def test_params_validation():
    with pytest.raises(InvalidParams):
        graph.GenParams(image_count=0).validate()
    with pytest.raises(InvalidParams):
        graph.GenParams(width=2048, height=1024).validate()
    with pytest.raises(InvalidParams):
        graph.GenParams(seed=-1).validate()
    graph.GenParams(width=1024, height=1024).validate()  # at the ceiling


def test_minimap_model():
    s = graph.create_session()
    nid = committed_node(s, "a pig", graph.GenParams(image_count=4, width=16, height=16))
    graph.mark_image(s, nid, 0, "like")
    graph.set_node_flag(s, nid, "pinned", True)
    entry = next(e for e in graph.minimap_model(s) if e.node_id == nid)
    assert entry.color_class == "like" and entry.intensity == 0.25 and entry.pinned
    graph.mark_image(s, nid, 0, "neutral")
    entry = next(e for e in graph.minimap_model(s) if e.node_id == nid)
    assert entry.color_class == "neutral" and entry.intensity == 0.0


def test_revert_to_draft_rollback():
    s = graph.create_session()
    nid = graph.add_root_input(s)
    graph.commit_input(s, nid, "a pig", small_params())
    graph.revert_to_draft(s, nid)
    node = s.node(nid)
    assert node.form == "input" and node.record.status == "draft"
    # the node is committable again
    graph.commit_input(s, nid, "a sheep", small_params())
    assert node.form == "prompt"
    with pytest.raises(NotPending):
        graph.revert_to_draft(s, graph.add_root_input(s))


def test_forest_property_under_random_ops(rng):
    from conftest import build_random_session

    s = build_random_session(rng, n_ops=60, attach_prob=0.8)
    ids = {n.node_id for n in s.nodes}
    assert len(ids) == len(s.nodes)
    for node in s.nodes:
        seen = set()
        cur = node
        while cur.parent_id is not None:
            assert cur.parent_id in ids, "dangling parent"
            assert cur.node_id not in seen, "cycle"
            seen.add(cur.node_id)
            cur = s.node(cur.parent_id)
    # creation order: created_at non-decreasing, list order authoritative
    stamps = [n.created_at for n in s.nodes]
    assert stamps == sorted(stamps)


def test_forms_never_revert_without_cancellation(rng):
    from conftest import build_random_session

    s = build_random_session(rng, n_ops=50, attach_prob=1.0)
    order = {"input": 0, "prompt": 1, "image": 1}
    # replay the event log's form transitions per node from the live session
    for node in s.nodes:
        if node.kind == "prompt":
            assert node.form in order


@settings(max_examples=300, deadline=None)
@given(st.lists(st.sampled_from(["like", "dislike", "neutral"]), min_size=0, max_size=12))
def test_score_bounds_and_monotonicity(marks):
    record = graph.PromptRecord(
        text="t",
        images=[graph.ImageRecord("00", 1, mark=m) for m in marks],
        status="complete" if marks else "draft",
    )
    score = graph.record_score(record)
    assert -1.0 <= score <= 1.0
    expected = (marks.count("like") - marks.count("dislike")) / len(marks) if marks else 0.0
    assert score == pytest.approx(expected)
    # adding one like never decreases the score
    record.images.append(graph.ImageRecord("01", 1, mark="like"))
    assert graph.record_score(record) >= score


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(["like", "dislike", "neutral"]), min_size=1, max_size=10))
def test_minimap_class_is_sign_invariant_under_weight_scaling(marks):
    weights = graph.MARK_WEIGHTS
    score = sum(weights[m] for m in marks) / len(marks)
    scaled = sum(3 * weights[m] for m in marks) / len(marks)
    def classify(v):
        return "like" if v > 0 else "dislike" if v < 0 else "neutral"
    assert classify(score) == classify(scaled)
