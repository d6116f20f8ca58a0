"""Assessment sessions: persistence, human overrides, votes, usage statistics.

Model originals are immutable once written; expert edits only ever touch the
``final_*`` fields and flip the corresponding source flag. Sessions are
journaled to an append-only JSON-lines event log with a materialized
snapshot, which keeps a full audit trail without a database dependency.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from .errors import DatasetError, GatingError, StateError
from .pipeline import AssessmentItem, ModelAnswer
from .questionnaire import Answer, Questionnaire, is_active
from .rules import OverallRule, RiskLevel, RuleTable, domain_judgment, overall_judgment
from .utils import SystemClock, canonical_dumps

SESSION_SCHEMA_VERSION = 1

STATUS_IN_PROGRESS = "in_progress"
STATUS_COMPLETE = "complete"

SOURCE_MODEL = "model"
SOURCE_EXPERT = "expert"


@dataclass
class QuestionRecord:
    qid: str
    final_answer: Answer
    model_answer: ModelAnswer | None = None
    model_rationale: str = ""
    final_rationale: str = ""
    answer_source: str = SOURCE_MODEL
    rationale_source: str = SOURCE_MODEL
    votes: list[tuple[int, str]] = field(default_factory=list)
    added_paragraphs: list[int] = field(default_factory=list)
    timestamps: dict[str, str] = field(default_factory=dict)

    def evidence_indices(self) -> list[int]:
        if self.model_answer is None:
            return []
        return [idx for idx, _ in self.model_answer.evidence]


@dataclass
class AssessmentSession:
    session_id: str
    doc_id: str
    annotator_id: str
    provenance: str = "assisted"  # "manual" | "assisted"
    model_id: str | None = None
    context_mode: str | None = None
    records: dict[str, QuestionRecord] = field(default_factory=dict)
    domain_judgments: dict[int, RiskLevel] = field(default_factory=dict)
    overall: RiskLevel | None = None
    status: str = STATUS_IN_PROGRESS

    def final_answers(self) -> dict[str, Answer]:
        return {qid: rec.final_answer for qid, rec in self.records.items()}


def records_from_items(
    items: Iterable[AssessmentItem], clock=None
) -> dict[str, QuestionRecord]:
    """Materialize store records from a pipeline run, skipping failed items."""
    clock = clock or SystemClock()
    records: dict[str, QuestionRecord] = {}
    for item in items:
        if item.answer is None:
            continue
        ts = clock.now()
        ma = item.model_answer
        records[item.qid] = QuestionRecord(
            qid=item.qid,
            final_answer=item.answer,
            model_answer=ma,
            model_rationale=ma.rationale if ma else "",
            final_rationale=ma.rationale if ma else "",
            answer_source=SOURCE_MODEL,
            rationale_source=SOURCE_MODEL,
            timestamps={"created": ts, "updated": ts},
        )
    return records


def record_override(
    session: AssessmentSession,
    qid: str,
    new_answer: Answer,
    new_rationale: str | None,
    questionnaire: Questionnaire,
    clock=None,
) -> AssessmentSession:
    """Apply an expert override and re-evaluate downstream cascade gates.

    Newly gated-off questions are set to not_applicable; questions that the
    override newly activates are cleared back to unanswered (their previous
    not_applicable records are invalidated).
    """
    clock = clock or SystemClock()
    if session.status == STATUS_COMPLETE:
        raise StateError(f"session {session.session_id} is complete; reopen to edit")
    if new_answer is Answer.NOT_APPLICABLE:
        raise GatingError("not_applicable can only be assigned by cascade gating")
    record = session.records.get(qid)
    if record is None:
        raise KeyError(f"question {qid} has no record to override")
    if record.final_answer is Answer.NOT_APPLICABLE:
        raise GatingError(f"question {qid} is gated off; override an antecedent instead")

    record.final_answer = new_answer
    record.answer_source = SOURCE_EXPERT
    if new_rationale is not None:
        record.final_rationale = new_rationale
        record.rationale_source = SOURCE_EXPERT
    record.timestamps["updated"] = clock.now()

    _reevaluate_gates(session, questionnaire, domain=int(qid.split(".")[0]), clock=clock)
    return session


def _reevaluate_gates(
    session: AssessmentSession, questionnaire: Questionnaire, domain: int, clock
) -> None:
    answers: dict[str, Answer] = {}
    for q in questionnaire.domain_questions(domain):
        rec = session.records.get(q.qid)
        known = {k: v for k, v in answers.items()}
        try:
            active = is_active(q, known)
        except Exception:
            # An antecedent was cleared to unanswered: this question's state
            # is unknown, so clear it as well.
            session.records.pop(q.qid, None)
            continue
        if not active:
            if rec is None or rec.final_answer is not Answer.NOT_APPLICABLE:
                ts = clock.now()
                session.records[q.qid] = QuestionRecord(
                    qid=q.qid,
                    final_answer=Answer.NOT_APPLICABLE,
                    timestamps={"created": ts, "updated": ts},
                )
            answers[q.qid] = Answer.NOT_APPLICABLE
        else:
            if rec is not None and rec.final_answer is Answer.NOT_APPLICABLE:
                session.records.pop(q.qid)  # newly active: back to unanswered
            elif rec is not None:
                answers[q.qid] = rec.final_answer


def record_vote(
    session: AssessmentSession, qid: str, paragraph_index: int, direction: str, clock=None
) -> AssessmentSession:
    """Store an up/down vote on an evidence paragraph (latest vote wins)."""
    clock = clock or SystemClock()
    if direction not in ("up", "down"):
        raise ValueError(f"vote direction must be 'up' or 'down', got {direction!r}")
    record = session.records.get(qid)
    if record is None:
        raise KeyError(f"question {qid} has no record")
    if paragraph_index not in record.evidence_indices():
        raise ValueError(
            f"paragraph {paragraph_index} was not shown as evidence for {qid}"
        )
    record.votes = [(idx, d) for idx, d in record.votes if idx != paragraph_index]
    record.votes.append((paragraph_index, direction))
    record.timestamps["updated"] = clock.now()
    return session


def add_paragraph(
    session: AssessmentSession, qid: str, paragraph_index: int, clock=None
) -> AssessmentSession:
    """Attach a user-selected paragraph as additional evidence for a question."""
    clock = clock or SystemClock()
    record = session.records.get(qid)
    if record is None:
        raise KeyError(f"question {qid} has no record")
    if paragraph_index in record.evidence_indices():
        raise ValueError(
            f"paragraph {paragraph_index} is already retrieved evidence for {qid}"
        )
    if paragraph_index not in record.added_paragraphs:
        record.added_paragraphs.append(paragraph_index)
        record.timestamps["updated"] = clock.now()
    return session


def complete_session(
    session: AssessmentSession,
    questionnaire: Questionnaire,
    tables: Mapping[int, RuleTable],
    rule: OverallRule = OverallRule(),
) -> AssessmentSession:
    """Derive domain and overall judgments from final answers and close the session."""
    missing = [q.qid for q in questionnaire if q.qid not in session.records]
    if missing:
        raise StateError(f"cannot complete session: unanswered questions {missing}")
    answers = session.final_answers()
    session.domain_judgments = {
        d: domain_judgment(tables[d], answers) for d in range(1, 6)
    }
    session.overall = overall_judgment(session.domain_judgments, rule)
    session.status = STATUS_COMPLETE
    return session


# ---------------------------------------------------------------------------
# Usage statistics


@dataclass
class UsageRow:
    answered: int = 0
    model_answers: int = 0
    expert_answers: int = 0
    model_rationales: int = 0
    expert_rationales: int = 0
    upvote_questions: int = 0
    downvote_questions: int = 0
    added_questions: int = 0
    upvotes_total: int = 0
    downvotes_total: int = 0
    added_total: int = 0

    def add(self, other: "UsageRow") -> None:
        for f in self.__dataclass_fields__:
            setattr(self, f, getattr(self, f) + getattr(other, f))


@dataclass
class UsageStats:
    per_domain: dict[int, UsageRow]
    total: UsageRow


def usage_stats(sessions: Iterable[AssessmentSession]) -> UsageStats:
    """Question-level feedback and source counts, per domain and total.

    Only answered questions count (not_applicable records carry no
    prediction). Vote and added-paragraph counts are reported both at the
    question level (number of questions with at least one) and raw.
    """
    per_domain = {d: UsageRow() for d in range(1, 6)}
    for session in sessions:
        for qid, rec in session.records.items():
            domain = int(qid.split(".")[0])
            row = per_domain[domain]
            if rec.final_answer is Answer.NOT_APPLICABLE:
                continue
            row.answered += 1
            if rec.answer_source == SOURCE_EXPERT:
                row.expert_answers += 1
            else:
                row.model_answers += 1
            if rec.rationale_source == SOURCE_EXPERT:
                row.expert_rationales += 1
            else:
                row.model_rationales += 1
            ups = sum(1 for _, d in rec.votes if d == "up")
            downs = sum(1 for _, d in rec.votes if d == "down")
            row.upvotes_total += ups
            row.downvotes_total += downs
            row.added_total += len(rec.added_paragraphs)
            if ups:
                row.upvote_questions += 1
            if downs:
                row.downvote_questions += 1
            if rec.added_paragraphs:
                row.added_questions += 1
    total = UsageRow()
    for row in per_domain.values():
        total.add(row)
    return UsageStats(per_domain=per_domain, total=total)


# ---------------------------------------------------------------------------
# Canonical export / import


def _model_answer_to_dict(ma: ModelAnswer | None) -> dict[str, Any] | None:
    if ma is None:
        return None
    return {
        "qid": ma.qid,
        "answer": ma.answer.value,
        "rationale": ma.rationale,
        "raw_response": ma.raw_response,
        "model_id": ma.model_id,
        "context_mode": ma.context_mode,
        "evidence": [[idx, score] for idx, score in ma.evidence],
    }


def _model_answer_from_dict(data: Mapping[str, Any] | None) -> ModelAnswer | None:
    if data is None:
        return None
    return ModelAnswer(
        qid=data["qid"],
        answer=Answer(data["answer"]),
        rationale=data.get("rationale", ""),
        raw_response=data.get("raw_response", ""),
        model_id=data.get("model_id", ""),
        context_mode=data.get("context_mode", ""),
        evidence=tuple((int(i), float(s)) for i, s in data.get("evidence", [])),
    )


def session_to_dict(session: AssessmentSession) -> dict[str, Any]:
    return {
        "schema_version": SESSION_SCHEMA_VERSION,
        "session_id": session.session_id,
        "doc_id": session.doc_id,
        "annotator_id": session.annotator_id,
        "provenance": session.provenance,
        "model_id": session.model_id,
        "context_mode": session.context_mode,
        "records": {
            qid: {
                "qid": rec.qid,
                "model_answer": _model_answer_to_dict(rec.model_answer),
                "final_answer": rec.final_answer.value,
                "model_rationale": rec.model_rationale,
                "final_rationale": rec.final_rationale,
                "answer_source": rec.answer_source,
                "rationale_source": rec.rationale_source,
                "votes": [[idx, d] for idx, d in rec.votes],
                "added_paragraphs": list(rec.added_paragraphs),
                "timestamps": dict(sorted(rec.timestamps.items())),
            }
            for qid, rec in sorted(session.records.items())
        },
        "domain_judgments": {
            str(d): lv.value for d, lv in sorted(session.domain_judgments.items())
        },
        "overall": session.overall.value if session.overall else None,
        "status": session.status,
    }


def export_session(session: AssessmentSession, *, pretty: bool = False) -> str:
    return canonical_dumps(session_to_dict(session), pretty=pretty)


def session_from_dict(data: Mapping[str, Any]) -> AssessmentSession:
    version = data.get("schema_version")
    if version != SESSION_SCHEMA_VERSION:
        raise DatasetError(f"unknown session schema version: {version!r}")
    try:
        records = {}
        for qid, rec in data.get("records", {}).items():
            records[qid] = QuestionRecord(
                qid=rec["qid"],
                final_answer=Answer(rec["final_answer"]),
                model_answer=_model_answer_from_dict(rec.get("model_answer")),
                model_rationale=rec.get("model_rationale", ""),
                final_rationale=rec.get("final_rationale", ""),
                answer_source=rec.get("answer_source", SOURCE_MODEL),
                rationale_source=rec.get("rationale_source", SOURCE_MODEL),
                votes=[(int(i), str(d)) for i, d in rec.get("votes", [])],
                added_paragraphs=[int(i) for i in rec.get("added_paragraphs", [])],
                timestamps=dict(rec.get("timestamps", {})),
            )
        return AssessmentSession(
            session_id=data["session_id"],
            doc_id=data["doc_id"],
            annotator_id=data.get("annotator_id", ""),
            provenance=data.get("provenance", "assisted"),
            model_id=data.get("model_id"),
            context_mode=data.get("context_mode"),
            records=records,
            domain_judgments={
                int(d): RiskLevel(lv) for d, lv in data.get("domain_judgments", {}).items()
            },
            overall=RiskLevel(data["overall"]) if data.get("overall") else None,
            status=data.get("status", STATUS_IN_PROGRESS),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"malformed session payload: {exc}") from exc


def import_session(payload: str | Mapping[str, Any]) -> AssessmentSession:
    if isinstance(payload, str):
        try:
            payload = json.loads(payload)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"invalid session JSON: {exc}") from exc
    if not isinstance(payload, Mapping):
        raise DatasetError("session payload must be a JSON object")
    return session_from_dict(payload)


# ---------------------------------------------------------------------------
# Event-sourced persistence


class SessionStore:
    """One directory per session: events.jsonl (append-only) + snapshot.json."""

    def __init__(self, root: str | Path, clock=None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._clock = clock or SystemClock()
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def _dir(self, session_id: str) -> Path:
        return self.root / session_id

    def journal(self, session_id: str, event: str, payload: Mapping[str, Any]) -> None:
        """Append an event; callers journal before acknowledging a mutation."""
        path = self._dir(session_id) / "events.jsonl"
        path.parent.mkdir(parents=True, exist_ok=True)
        line = json.dumps(
            {"ts": self._clock.now(), "session_id": session_id, "event": event, "payload": payload},
            sort_keys=True,
            ensure_ascii=False,
        )
        with self._lock_for(session_id):
            with path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def save(self, session: AssessmentSession) -> None:
        path = self._dir(session.session_id) / "snapshot.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        with self._lock_for(session.session_id):
            path.write_text(export_session(session, pretty=True), "utf-8")

    def load(self, session_id: str) -> AssessmentSession:
        path = self._dir(session_id) / "snapshot.json"
        if not path.exists():
            raise KeyError(f"no such session: {session_id}")
        return import_session(path.read_text("utf-8"))

    def exists(self, session_id: str) -> bool:
        return (self._dir(session_id) / "snapshot.json").exists()

    def list_ids(self) -> list[str]:
        if not self.root.exists():
            return []
        return sorted(p.name for p in self.root.iterdir() if (p / "snapshot.json").exists())
