from __future__ import annotations

import json

import pytest

from vizlink import (
    BoxGeometry,
    DirectManipulation,
    ManipulationKind,
    ModelRegistry,
    Pipeline,
    load_session,
    save_session,
)
from vizlink import HistoryTurn, build_prompt
from vizlink.errors import CorruptArchive, NotFound, SchemaVersionMismatch
from vizlink.postprocess import FailureKind
from vizlink.session import attach_thumbnail

from flows import NETFLIX_FLOW, STEEL_FLOW, TurnSpec, flow_backend

REGISTRY = ModelRegistry(("scripted-default", "scripted-alt"))


@pytest.fixture()
def pipeline():
    return Pipeline(flow_backend(NETFLIX_FLOW, STEEL_FLOW), REGISTRY)


def run_flow(pipeline, dataset, flow, turns=None):
    session = pipeline.create_session(dataset)
    for spec in flow[: turns or len(flow)]:
        pipeline.append_entry(session, dataset, spec.nl, list(spec.manipulations))
    return session


class TestAppendEntry:
    def test_first_turn_gets_scripted_artifact(self, pipeline, netflix_dataset):
        session = run_flow(pipeline, netflix_dataset, NETFLIX_FLOW, turns=1)
        entry = session.entries[0]
        assert entry.index == 0
        assert entry.artifact.failure is None
        assert entry.artifact.extracted_code == NETFLIX_FLOW[0].code
        assert session.active_entry_index == 0

    def test_freedraw_turn_records_vision_descriptor(self, pipeline, netflix_dataset):
        session = run_flow(pipeline, netflix_dataset, NETFLIX_FLOW, turns=2)
        entry = session.entries[1]
        (descriptor,) = entry.descriptors
        assert descriptor.text == "an arrow indicating a steady upward trend"
        assert descriptor.inferred_intent == "an arrow indicating a steady upward trend"
        (link,) = entry.link_result.links
        assert link.trigger.text == "this trend"
        assert link.descriptor_ids == (descriptor.manipulation_id,)

    def test_box_turn_produces_x_axis_descriptor(self, pipeline, netflix_dataset):
        session = run_flow(pipeline, netflix_dataset, NETFLIX_FLOW)
        entry = session.entries[3]
        (descriptor,) = entry.descriptors
        assert descriptor.text == (
            "selected data range on the x-axis: [2021-10-01, 2022-07-01]"
        )

    def test_below_threshold_box_records_warning(self, pipeline, netflix_dataset):
        session = run_flow(pipeline, netflix_dataset, NETFLIX_FLOW, turns=1)
        tiny = DirectManipulation(
            id=9,
            kind=ManipulationKind.BOX_SELECT,
            box=BoxGeometry(0.0, 1.0, 0.0, 1.0, 0.01, 0.02),
        )
        entry = pipeline.append_entry(
            session, netflix_dataset, NETFLIX_FLOW[2].nl, [tiny]
        )
        assert entry.descriptors == []
        assert any("discarded" in w for w in entry.warnings)
        assert entry.artifact.failure is None

    def test_agent_failure_recorded_not_raised(self, netflix_dataset):
        broken = flow_backend()  # knows no prompts → AgentUnavailable
        pipeline = Pipeline(broken, REGISTRY)
        session = pipeline.create_session(netflix_dataset)
        entry = pipeline.append_entry(session, netflix_dataset, "anything", [])
        assert entry.artifact.failure is not None
        assert entry.artifact.failure.kind == FailureKind.MISSING_CODE_TAG
        assert len(session.entries) == 1

    def test_history_feeds_following_prompts(self, pipeline, netflix_dataset):
        session = run_flow(pipeline, netflix_dataset, NETFLIX_FLOW, turns=3)
        third_prompt = session.entries[2].prompt_document
        assert [t.nl for t in third_prompt.conversation_context] == [
            NETFLIX_FLOW[0].nl,
            NETFLIX_FLOW[1].nl,
        ]
        # only the immediately previous turn carries code
        assert third_prompt.conversation_context[0].code is None
        assert third_prompt.conversation_context[1].code == NETFLIX_FLOW[1].code


class TestReplayDeterminism:
    def test_same_flow_twice_identical_artifacts(self, pipeline, netflix_dataset):
        first = run_flow(pipeline, netflix_dataset, NETFLIX_FLOW)
        second = run_flow(pipeline, netflix_dataset, NETFLIX_FLOW)
        assert all(e.artifact.failure is None for e in first.entries)
        for a, b in zip(first.entries, second.entries):
            assert a.artifact == b.artifact

    def test_steel_flow_executes_fully(self, pipeline, steel_dataset):
        session = run_flow(pipeline, steel_dataset, STEEL_FLOW)
        assert len(session.entries) == 4
        assert all(e.artifact.failure is None for e in session.entries)
        assert session.entries[3].descriptors[0].text.startswith(
            "a rectangle at the bottom of the chart"
        )


class TestEditEntry:
    def test_edit_archives_tail(self, pipeline, netflix_dataset):
        session = run_flow(pipeline, netflix_dataset, NETFLIX_FLOW, turns=3)
        pipeline.edit_entry(
            session, netflix_dataset, 1, nl=NETFLIX_FLOW[1].nl
        )
        assert len(session.entries) == 2
        assert len(session.archived_branches) == 1
        branch = session.archived_branches[0]
        assert branch.tag == "branch-1-from-1"
        assert [e.index for e in branch.entries] == [1, 2]
        assert session.active_entry_index == 1

    def test_identical_edit_reproduces_artifact(self, pipeline, netflix_dataset):
        session = run_flow(pipeline, netflix_dataset, NETFLIX_FLOW, turns=3)
        original = session.entries[1].artifact
        edited = pipeline.edit_entry(session, netflix_dataset, 1)
        assert edited.artifact == original

    def test_manipulation_edit_reruns_linking(self, pipeline, netflix_dataset):
        session = run_flow(pipeline, netflix_dataset, NETFLIX_FLOW)
        original = session.entries[3]
        assert original.link_result.links  # box linked to "this range"
        edited = pipeline.edit_entry(session, netflix_dataset, 3, manipulations=[])
        assert edited.descriptors == []
        assert edited.link_result.links == ()
        assert edited.link_result.unmatched_descriptor_ids == ()

    def test_edit_out_of_range(self, pipeline, netflix_dataset):
        session = run_flow(pipeline, netflix_dataset, NETFLIX_FLOW, turns=1)
        with pytest.raises(NotFound):
            pipeline.edit_entry(session, netflix_dataset, 5)

    def test_no_operation_deletes_turns(self, pipeline, netflix_dataset):
        session = run_flow(pipeline, netflix_dataset, NETFLIX_FLOW)
        executed = [e.artifact for e in session.entries]
        pipeline.edit_entry(session, netflix_dataset, 0)
        preserved = [e.artifact for b in session.archived_branches for e in b.entries]
        for artifact in executed:
            assert artifact in preserved or artifact in [
                e.artifact for e in session.entries
            ]


class TestSaveLoad:
    def test_round_trip_deep_equality(self, pipeline, netflix_dataset):
        session = run_flow(pipeline, netflix_dataset, NETFLIX_FLOW, turns=3)
        attach_thumbnail(session, 0, "aGVsbG8=")
        data = save_session(session)
        loaded = load_session(data)
        assert loaded.to_doc() == session.to_doc()

    def test_truncated_archive_corrupt(self, pipeline, netflix_dataset):
        session = run_flow(pipeline, netflix_dataset, NETFLIX_FLOW, turns=2)
        data = save_session(session)
        with pytest.raises(CorruptArchive):
            load_session(data[: len(data) // 2])

    def test_schema_version_mismatch(self, pipeline, netflix_dataset):
        session = run_flow(pipeline, netflix_dataset, NETFLIX_FLOW, turns=1)
        doc = json.loads(save_session(session))
        doc["schemaVersion"] = 99
        with pytest.raises(SchemaVersionMismatch):
            load_session(json.dumps(doc).encode())

    def test_missing_fields_corrupt(self):
        with pytest.raises(CorruptArchive):
            load_session(b'{"schemaVersion": 1, "id": "x"}')

    def test_loaded_session_replays_identically(self, pipeline, netflix_dataset):
        session = run_flow(pipeline, netflix_dataset, NETFLIX_FLOW)
        loaded = load_session(save_session(session))
        artifacts = pipeline.replay(loaded, netflix_dataset)
        assert artifacts == [e.artifact for e in session.entries]

    def test_entries_rebuild_prompts_byte_exactly(self, pipeline, netflix_dataset):
        session = run_flow(pipeline, netflix_dataset, NETFLIX_FLOW)
        loaded = load_session(save_session(session))
        for original, restored in zip(session.entries, loaded.entries):
            assert (
                restored.prompt_document.to_text()
                == original.prompt_document.to_text()
            )

    def test_entry_self_containment(self, pipeline, netflix_dataset):
        # each entry's stored inputs + the prior entries reproduce its prompt
        session = run_flow(pipeline, netflix_dataset, NETFLIX_FLOW)
        for k, entry in enumerate(session.entries):
            history = []
            for position, prior in enumerate(session.entries[:k]):
                code = (
                    prior.artifact.extracted_code
                    if position == k - 1 and prior.artifact.extracted_code
                    else None
                )
                history.append(
                    HistoryTurn(prior.nl_input, prior.artifact.explanation, code)
                )
            rebuilt = build_prompt(
                netflix_dataset,
                entry.nl_input,
                entry.link_result,
                entry.descriptors,
                history,
            )
            assert rebuilt.to_text() == entry.prompt_document.to_text()


class TestThumbnail:
    def test_attach_and_reject_unknown(self, pipeline, netflix_dataset):
        session = run_flow(pipeline, netflix_dataset, NETFLIX_FLOW, turns=1)
        entry = attach_thumbnail(session, 0, "cGl4ZWxz")
        assert entry.thumbnail_png_b64 == "cGl4ZWxz"
        with pytest.raises(NotFound):
            attach_thumbnail(session, 3, "eA==")


class TestOpenEndedSessionStart:
    def test_overview_request_opens_a_session(self, netflix_dataset):
        # open-ended starters work without any manipulation context
        spec = TurnSpec(
            nl="Show me the overview of the dataset",
            manipulations=(),
            code=NETFLIX_FLOW[0].code,
            explanation="A broad line chart over the full date range.",
        )
        pipeline = Pipeline(flow_backend((spec,)), REGISTRY)
        session = pipeline.create_session(netflix_dataset)
        entry = pipeline.append_entry(session, netflix_dataset, spec.nl, [])
        assert entry.artifact.failure is None
        assert entry.link_result.links == ()
        assert entry.prompt_document.structured_intents == spec.nl
