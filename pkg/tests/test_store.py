from __future__ import annotations

import json

import pytest

from rob2kit.errors import DatasetError, GatingError, StateError
from rob2kit.llm import GenerationConfig, StubLLM
from rob2kit.pipeline import assess_document
from rob2kit.prompts import ContextMode
from rob2kit.questionnaire import Answer
from rob2kit.rules import RiskLevel
from rob2kit.store import (
    AssessmentSession,
    SessionStore,
    add_paragraph,
    complete_session,
    export_session,
    import_session,
    record_override,
    record_vote,
    records_from_items,
    usage_stats,
)
from rob2kit.utils import FixedClock

A = Answer


def make_session(fixture_doc, fixture_index, questionnaire, hash_embedder, label="yes"):
    llm = StubLLM(behavior="fixed", fixed_label=label)
    items = assess_document(
        fixture_doc,
        questionnaire,
        fixture_index,
        ContextMode.parse("topk:3"),
        llm,
        GenerationConfig(model="stub"),
        embedder=hash_embedder,
    )
    return AssessmentSession(
        session_id="s-1",
        doc_id=fixture_doc.doc_id,
        annotator_id="tester",
        provenance="assisted",
        model_id="stub",
        context_mode="topk:3",
        records=records_from_items(items, clock=FixedClock()),
    )


@pytest.fixture()
def session(fixture_doc, fixture_index, questionnaire, hash_embedder):
    # all answers "no": domain 2 chain 2.3-2.5 gated off
    return make_session(fixture_doc, fixture_index, questionnaire, hash_embedder, label="no")


def test_override_reactivates_downstream_questions(session, questionnaire):
    assert session.records["2.3"].final_answer is A.NOT_APPLICABLE
    record_override(session, "2.1", A.YES, None, questionnaire, clock=FixedClock())
    assert session.records["2.1"].final_answer is A.YES
    assert session.records["2.1"].answer_source == "expert"
    # 2.3 is now active and unanswered
    assert "2.3" not in session.records
    # its own dependents are cleared too (state unknown until 2.3 is answered)
    assert "2.4" not in session.records
    assert "2.5" not in session.records
    # model original untouched
    assert session.records["2.1"].model_answer.answer is A.NO


def test_override_answer_only_keeps_model_rationale(session, questionnaire):
    record_override(session, "1.1", A.PROBABLY_YES, None, questionnaire)
    rec = session.records["1.1"]
    assert rec.answer_source == "expert"
    assert rec.rationale_source == "model"
    assert rec.final_rationale == rec.model_rationale


def test_override_with_rationale_flips_both_sources(session, questionnaire):
    record_override(session, "1.1", A.NO, "Alternation is not random.", questionnaire)
    rec = session.records["1.1"]
    assert rec.rationale_source == "expert"
    assert rec.final_rationale == "Alternation is not random."
    assert rec.model_rationale != rec.final_rationale


def test_override_gated_off_question_is_rejected(session, questionnaire):
    with pytest.raises(GatingError):
        record_override(session, "2.3", A.YES, None, questionnaire)


def test_override_complete_session_is_rejected(
    session, questionnaire, rule_tables
):
    complete_session(session, questionnaire, rule_tables)
    with pytest.raises(StateError):
        record_override(session, "1.1", A.YES, None, questionnaire)


def test_override_to_not_applicable_is_rejected(session, questionnaire):
    with pytest.raises(GatingError):
        record_override(session, "1.1", A.NOT_APPLICABLE, None, questionnaire)


def test_complete_derives_judgments_from_final_answers(session, questionnaire, rule_tables):
    complete_session(session, questionnaire, rule_tables)
    assert session.status == "complete"
    assert set(session.domain_judgments) == {1, 2, 3, 4, 5}
    # all-"no" answers: 1.2=no forces domain 1 high, so overall is high
    assert session.domain_judgments[1] is RiskLevel.HIGH
    assert session.overall is RiskLevel.HIGH


def test_complete_requires_all_questions(session, questionnaire, rule_tables):
    del session.records["5.3"]
    with pytest.raises(StateError, match="5.3"):
        complete_session(session, questionnaire, rule_tables)


def test_vote_latest_wins(session):
    evidence = session.records["1.1"].evidence_indices()
    target = evidence[0]
    record_vote(session, "1.1", target, "up")
    record_vote(session, "1.1", target, "down")
    assert session.records["1.1"].votes == [(target, "down")]


def test_vote_stored_per_paragraph(session):
    e = session.records["1.1"].evidence_indices()
    record_vote(session, "1.1", e[0], "up")
    record_vote(session, "1.1", e[1], "down")
    assert (e[0], "up") in session.records["1.1"].votes
    assert (e[1], "down") in session.records["1.1"].votes


def test_vote_on_non_evidence_paragraph_rejected(session):
    outside = max(session.records["1.1"].evidence_indices()) + 10
    with pytest.raises(ValueError):
        record_vote(session, "1.1", outside, "up")


def test_added_paragraphs_disjoint_from_evidence(session):
    e = session.records["1.1"].evidence_indices()
    with pytest.raises(ValueError):
        add_paragraph(session, "1.1", e[0])
    outside = max(e) + 1
    add_paragraph(session, "1.1", outside)
    assert session.records["1.1"].added_paragraphs == [outside]


def test_usage_stats_empty_collection_is_all_zeros():
    stats = usage_stats([])
    assert stats.total.answered == 0
    assert stats.total.upvote_questions == 0
    assert all(row.answered == 0 for row in stats.per_domain.values())


def test_usage_stats_small_fixture(session, questionnaire):
    record_override(session, "1.1", A.PROBABLY_NO, "expert text", questionnaire)
    record_override(session, "5.1", A.YES, None, questionnaire)
    e = session.records["1.2"].evidence_indices()
    record_vote(session, "1.2", e[0], "up")
    record_vote(session, "1.2", e[1], "down")
    add_paragraph(session, "1.3", max(session.records["1.3"].evidence_indices()) + 5)

    stats = usage_stats([session])
    d1 = stats.per_domain[1]
    assert d1.answered == 3
    assert d1.expert_answers == 1 and d1.model_answers == 2
    assert d1.expert_rationales == 1 and d1.model_rationales == 2
    assert d1.upvote_questions == 1 and d1.downvote_questions == 1
    assert d1.upvotes_total == 1 and d1.downvotes_total == 1
    assert d1.added_questions == 1 and d1.added_total == 1
    # not_applicable records carry no prediction
    assert stats.per_domain[2].answered == 4  # 2.1, 2.2, 2.6, 2.7 ("no" gating)
    assert stats.total.answered == sum(r.answered for r in stats.per_domain.values())
    assert stats.total.expert_answers == 2


def test_export_import_round_trip(session, questionnaire, rule_tables):
    complete_session(session, questionnaire, rule_tables)
    blob = export_session(session)
    again = import_session(blob)
    assert export_session(again) == blob
    assert again.domain_judgments == session.domain_judgments
    assert again.records["1.1"].model_answer == session.records["1.1"].model_answer


def test_import_manual_record_shape():
    # one dataset-style manual record inspected by hand
    payload = {
        "schema_version": 1,
        "session_id": "m-1",
        "doc_id": "trial-7",
        "annotator_id": "rater-a",
        "provenance": "manual",
        "model_id": None,
        "context_mode": None,
        "records": {
            "1.1": {
                "qid": "1.1",
                "model_answer": None,
                "final_answer": "probably_yes",
                "model_rationale": "",
                "final_rationale": "Central randomization described.",
                "answer_source": "expert",
                "rationale_source": "expert",
                "votes": [],
                "added_paragraphs": [4],
                "timestamps": {},
            }
        },
        "domain_judgments": {"1": "low"},
        "overall": None,
        "status": "in_progress",
    }
    session = import_session(json.dumps(payload))
    assert session.provenance == "manual"
    rec = session.records["1.1"]
    assert rec.answer_source == "expert" and rec.rationale_source == "expert"
    assert rec.model_answer is None
    assert rec.added_paragraphs == [4]


def test_import_rejects_unknown_schema_version():
    with pytest.raises(DatasetError, match="schema version"):
        import_session(json.dumps({"schema_version": 99, "session_id": "x", "doc_id": "y"}))


def test_import_rejects_truncated_json(session):
    blob = export_session(session)[:-30]
    with pytest.raises(DatasetError):
        import_session(blob)


def test_session_store_journals_and_snapshots(tmp_path, session):
    store = SessionStore(tmp_path / "sessions", clock=FixedClock(tick=True))
    store.journal(session.session_id, "session_created", {"doc_id": session.doc_id})
    store.save(session)
    store.journal(session.session_id, "vote", {"qid": "1.1", "paragraph_index": 0})

    loaded = store.load(session.session_id)
    assert export_session(loaded) == export_session(session)
    events = [
        json.loads(line)
        for line in (tmp_path / "sessions" / "s-1" / "events.jsonl").read_text().splitlines()
    ]
    assert [e["event"] for e in events] == ["session_created", "vote"]
    assert store.list_ids() == ["s-1"]
    assert store.exists("s-1") and not store.exists("nope")


def test_model_originals_survive_override(session, questionnaire):
    original = session.records["1.1"].model_answer
    record_override(session, "1.1", A.PROBABLY_NO, "changed", questionnaire)
    assert session.records["1.1"].model_answer == original
    assert session.records["1.1"].model_rationale == original.rationale
