"""HTTP service exposing the assessment pipeline to the review UI and scripts.

Handlers are thin adapters over the module operations: every response can be
reproduced by calling the underlying functions directly, and every mutation
is journaled to the session event log before it is acknowledged.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field as dc_field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .documents import (
    TrialDocument,
    document_from_dict,
    document_to_dict,
    ingest_document,
    validate_document,
)
from .errors import (
    ConfigurationError,
    DatasetError,
    DocumentParseError,
    EmptyDocumentError,
    GatingError,
    LLMUpstreamError,
    Rob2Error,
    SequencingError,
    StateError,
    UnparseableResponseError,
)
from .llm import GenerationConfig, LLMClient, StubLLM
from .pipeline import ModelAnswer
from .prompts import ContextMode, build_prompt, parse_answer
from .questionnaire import Answer, Questionnaire, is_active, load_questionnaire
from .retrieval import build_index, query_vector
from .rules import OverallRule, domain_judgment, load_default_tables, overall_judgment
from .store import (
    STATUS_IN_PROGRESS,
    AssessmentSession,
    QuestionRecord,
    SessionStore,
    add_paragraph,
    record_override,
    record_vote,
)
from .utils import SystemClock

_STATUS_OF_ERROR = {
    DocumentParseError: 400,
    ConfigurationError: 400,
    EmptyDocumentError: 422,
    DatasetError: 404,
    SequencingError: 409,
    GatingError: 409,
    StateError: 409,
    UnparseableResponseError: 502,
    LLMUpstreamError: 502,
}


@dataclass
class ServiceConfig:
    data_dir: Path
    llm: LLMClient = dc_field(default_factory=StubLLM)
    generation: GenerationConfig = dc_field(default_factory=lambda: GenerationConfig(model="stub"))
    default_mode: str = "topk:3"
    clock: object = dc_field(default_factory=SystemClock)


class _State:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.questionnaire: Questionnaire = load_questionnaire()
        self.tables = load_default_tables()
        from .embedders import HashEmbedder

        self.embedder = HashEmbedder()
        self.documents: dict[str, TrialDocument] = {}
        self.indexes: dict[str, object] = {}
        self.sessions = SessionStore(Path(config.data_dir) / "sessions", clock=config.clock)
        self.locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()
        self.doc_dir = Path(config.data_dir) / "documents"
        self.doc_dir.mkdir(parents=True, exist_ok=True)
        for path in self.doc_dir.glob("*.json"):
            import json

            doc = document_from_dict(json.loads(path.read_text("utf-8")))
            self.documents[doc.doc_id] = doc

    def lock_for(self, session_id: str) -> threading.Lock:
        with self._guard:
            return self.locks.setdefault(session_id, threading.Lock())

    def index_for(self, doc_id: str):
        if doc_id not in self.indexes:
            self.indexes[doc_id] = build_index(self.documents[doc_id], self.embedder)
        return self.indexes[doc_id]

    def save_document(self, doc: TrialDocument) -> None:
        import json

        self.documents[doc.doc_id] = doc
        safe = doc.doc_id.replace(":", "_")
        (self.doc_dir / f"{safe}.json").write_text(
            json.dumps(document_to_dict(doc), sort_keys=True, ensure_ascii=False), "utf-8"
        )


class CreateAssessmentBody(BaseModel):
    doc_id: str
    mode: str | None = None
    model: str | None = None
    annotator_id: str = "anonymous"


class OverrideBody(BaseModel):
    answer: str
    rationale: str | None = None


class VoteBody(BaseModel):
    paragraph_index: int = Field(ge=0)
    direction: str


class AddParagraphBody(BaseModel):
    paragraph_index: int = Field(ge=0)


def _model_answer_json(ma: ModelAnswer | None) -> dict | None:
    if ma is None:
        return None
    return {
        "qid": ma.qid,
        "answer": ma.answer.value,
        "rationale": ma.rationale,
        "model_id": ma.model_id,
        "context_mode": ma.context_mode,
        "evidence": [{"paragraph_index": i, "score": s} for i, s in ma.evidence],
    }


def _record_json(rec: QuestionRecord) -> dict:
    return {
        "qid": rec.qid,
        "final_answer": rec.final_answer.value,
        "final_rationale": rec.final_rationale,
        "answer_source": rec.answer_source,
        "rationale_source": rec.rationale_source,
        "model_answer": _model_answer_json(rec.model_answer),
        "votes": [{"paragraph_index": i, "direction": d} for i, d in rec.votes],
        "added_paragraphs": list(rec.added_paragraphs),
    }


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="rob2kit service", version="0.1.0")
    state = _State(config)
    app.state.engine = state

    @app.exception_handler(Rob2Error)
    async def rob2_error_handler(_request: Request, exc: Rob2Error):
        status = 500
        for cls, code in _STATUS_OF_ERROR.items():
            if isinstance(exc, cls):
                status = code
                break
        payload = {"error": {"code": exc.code, "message": str(exc)}}
        if status == 502:
            payload["error"]["retry"] = "upstream model failed; retry the question"
        return JSONResponse(status_code=status, content=payload)

    @app.exception_handler(KeyError)
    async def missing_handler(_request: Request, exc: KeyError):
        return JSONResponse(
            status_code=404, content={"error": {"code": "not_found", "message": str(exc)}}
        )

    @app.exception_handler(ValueError)
    async def conflict_handler(_request: Request, exc: ValueError):
        return JSONResponse(
            status_code=409, content={"error": {"code": "conflict", "message": str(exc)}}
        )

    # -- documents -----------------------------------------------------------

    @app.post("/documents", status_code=201)
    async def upload_document(request: Request):
        raw = await request.body()
        doc = ingest_document(raw.decode("utf-8"))
        violations = validate_document(doc)
        if violations:
            raise EmptyDocumentError("; ".join(violations))
        state.save_document(doc)
        state.index_for(doc.doc_id)
        return {"doc_id": doc.doc_id, "paragraphs": len(doc.paragraphs)}

    @app.get("/documents/{doc_id}")
    async def get_document(doc_id: str):
        doc = state.documents[doc_id]
        return document_to_dict(doc)

    # -- assessments ---------------------------------------------------------

    @app.post("/assessments", status_code=201)
    async def create_assessment(body: CreateAssessmentBody):
        if body.doc_id not in state.documents:
            raise KeyError(f"unknown document {body.doc_id}")
        mode = body.mode or state.config.default_mode
        ContextMode.parse(mode)  # validate early
        session_id = f"sess-{body.doc_id.replace(':', '-')}-{len(state.sessions.list_ids()):04d}"
        session = AssessmentSession(
            session_id=session_id,
            doc_id=body.doc_id,
            annotator_id=body.annotator_id,
            provenance="assisted",
            model_id=body.model or state.config.generation.model,
            context_mode=mode,
            status=STATUS_IN_PROGRESS,
        )
        state.sessions.journal(session_id, "session_created", {"doc_id": body.doc_id, "mode": mode})
        state.sessions.save(session)
        return {"session_id": session_id}

    def _load_session(session_id: str) -> AssessmentSession:
        return state.sessions.load(session_id)

    @app.get("/assessments/{session_id}/questions")
    async def question_states(session_id: str):
        session = _load_session(session_id)
        answers = session.final_answers()
        out = []
        for q in state.questionnaire:
            rec = session.records.get(q.qid)
            try:
                active = is_active(q, answers)
            except SequencingError:
                active = None  # blocked until antecedents are answered
            out.append(
                {
                    "qid": q.qid,
                    "domain": q.domain,
                    "text": q.text,
                    "elaboration": q.elaboration,
                    "active": active,
                    "answered": rec is not None,
                    "record": _record_json(rec) if rec else None,
                }
            )
        return {"session_id": session_id, "status": session.status, "questions": out}

    @app.post("/assessments/{session_id}/questions/{qid}/answer")
    async def answer_question(session_id: str, qid: str):
        question = state.questionnaire.by_qid(qid)
        with state.lock_for(session_id):
            session = _load_session(session_id)
            if session.status != STATUS_IN_PROGRESS:
                raise StateError("session is complete")
            if qid in session.records:
                raise StateError(f"question {qid} already answered; use PATCH to override")
            answers = session.final_answers()
            if not is_active(question, answers):
                raise GatingError(f"question {qid} is gated off")
            doc = state.documents[session.doc_id]
            index = state.index_for(session.doc_id)
            mode = ContextMode.parse(session.context_mode or state.config.default_mode)
            if mode.kind == "topk":
                results = query_vector(index, question.text, mode.k or 3, state.embedder)
                passages = [doc.paragraphs[r.paragraph_index].text for r in results]
                evidence = tuple((r.paragraph_index, r.score) for r in results)
            else:
                from .prompts import full_paper_passages

                passages = full_paper_passages(doc)
                evidence = tuple((p.index, 0.0) for p in doc.paragraphs)
            prompt = build_prompt(question, mode, passages)
            raw = state.config.llm.complete(
                prompt, state.config.generation, tags={"doc_id": doc.doc_id, "qid": qid}
            )
            answer, rationale = parse_answer(raw)
            model_answer = ModelAnswer(
                qid=qid,
                answer=answer,
                rationale=rationale,
                raw_response=raw,
                model_id=state.config.generation.model,
                context_mode=str(mode),
                evidence=evidence,
            )
            ts = state.config.clock.now()
            session.records[qid] = QuestionRecord(
                qid=qid,
                final_answer=answer,
                model_answer=model_answer,
                model_rationale=rationale,
                final_rationale=rationale,
                timestamps={"created": ts, "updated": ts},
            )
            # record gated-off dependents eagerly so the UI sees them
            answers = session.final_answers()
            for q in state.questionnaire.domain_questions(question.domain):
                if q.qid in session.records:
                    continue
                try:
                    if not is_active(q, answers):
                        session.records[q.qid] = QuestionRecord(
                            qid=q.qid,
                            final_answer=Answer.NOT_APPLICABLE,
                            timestamps={"created": ts, "updated": ts},
                        )
                        answers[q.qid] = Answer.NOT_APPLICABLE
                except SequencingError:
                    break
            state.sessions.journal(session_id, "question_answered", {"qid": qid, "answer": answer.value})
            state.sessions.save(session)
            return _record_json(session.records[qid])

    @app.patch("/assessments/{session_id}/questions/{qid}/answer")
    async def override_answer(session_id: str, qid: str, body: OverrideBody):
        with state.lock_for(session_id):
            session = _load_session(session_id)
            record_override(
                session,
                qid,
                Answer(body.answer),
                body.rationale,
                state.questionnaire,
                clock=state.config.clock,
            )
            state.sessions.journal(
                session_id, "answer_overridden", {"qid": qid, "answer": body.answer}
            )
            state.sessions.save(session)
            return _record_json(session.records[qid])

    @app.post("/assessments/{session_id}/questions/{qid}/votes")
    async def vote(session_id: str, qid: str, body: VoteBody):
        with state.lock_for(session_id):
            session = _load_session(session_id)
            record_vote(session, qid, body.paragraph_index, body.direction, clock=state.config.clock)
            state.sessions.journal(
                session_id,
                "evidence_voted",
                {"qid": qid, "paragraph_index": body.paragraph_index, "direction": body.direction},
            )
            state.sessions.save(session)
            return _record_json(session.records[qid])

    @app.post("/assessments/{session_id}/questions/{qid}/paragraphs")
    async def add_evidence_paragraph(session_id: str, qid: str, body: AddParagraphBody):
        with state.lock_for(session_id):
            session = _load_session(session_id)
            doc = state.documents[session.doc_id]
            if body.paragraph_index >= len(doc.paragraphs):
                raise ValueError(f"paragraph {body.paragraph_index} out of range")
            add_paragraph(session, qid, body.paragraph_index, clock=state.config.clock)
            state.sessions.journal(
                session_id,
                "paragraph_added",
                {"qid": qid, "paragraph_index": body.paragraph_index},
            )
            state.sessions.save(session)
            return _record_json(session.records[qid])

    @app.get("/assessments/{session_id}/summary")
    async def summary(session_id: str):
        session = _load_session(session_id)
        answers = session.final_answers()
        domains: dict[int, str | None] = {}
        for d in range(1, 6):
            qids = [q.qid for q in state.questionnaire.domain_questions(d)]
            if all(qid in answers for qid in qids):
                domains[d] = domain_judgment(state.tables[d], answers).value
            else:
                domains[d] = None
        overall = None
        if all(v is not None for v in domains.values()):
            from .rules import RiskLevel

            overall = overall_judgment(
                {d: RiskLevel(v) for d, v in domains.items()}, OverallRule()
            ).value
        return {
            "session_id": session_id,
            "status": session.status,
            "domains": {str(d): v for d, v in domains.items()},
            "overall": overall,
        }

    return app
