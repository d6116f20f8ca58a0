"""Per-document question answering: retrieve, prompt, parse, cascade.

Questions are answered strictly in qid order because cascade gates consume
earlier answers. Gated-off questions are recorded as not_applicable without
an LLM call. An unparseable response is retried once verbatim and then
surfaced as a per-question error so the assessment stays resumable; gated
dependents of a failed question are marked as errors too rather than being
answered on an assumed antecedent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .documents import TrialDocument
from .errors import ConfigurationError, LLMUpstreamError, SequencingError, UnparseableResponseError
from .llm import GenerationConfig, LLMClient
from .prompts import ContextMode, build_fewshot_prompt, build_prompt, full_paper_passages, parse_answer
from .questionnaire import Answer, Questionnaire, is_active
from .retrieval import EmbedderInterface, ParagraphIndex, query_vector


@dataclass(frozen=True)
class ModelAnswer:
    qid: str
    answer: Answer  # never NOT_APPLICABLE; that arises only from gating
    rationale: str
    raw_response: str
    model_id: str
    context_mode: str
    evidence: tuple[tuple[int, float], ...]  # (paragraph_index, score)


@dataclass(frozen=True)
class AssessmentItem:
    """One question's outcome in an assessment run."""

    qid: str
    answer: Answer | None  # None when the LLM call or parse failed
    model_answer: ModelAnswer | None
    error: str | None = None

    @property
    def gated_off(self) -> bool:
        return self.answer is Answer.NOT_APPLICABLE


def _passages_for(
    doc: TrialDocument,
    index: ParagraphIndex,
    question_text: str,
    mode: ContextMode,
    embedder: EmbedderInterface | None,
    oracle_evidence: Mapping[str, int] | None,
    qid: str,
) -> tuple[list[str], tuple[tuple[int, float], ...]]:
    if mode.kind == "full":
        return full_paper_passages(doc), tuple((p.index, 0.0) for p in doc.paragraphs)
    if mode.kind == "oracle":
        if oracle_evidence is None or qid not in oracle_evidence:
            raise ConfigurationError(f"oracle mode requires evidence for question {qid}")
        idx = oracle_evidence[qid]
        return [doc.paragraphs[idx].text], ((idx, 1.0),)
    if embedder is None:
        raise ConfigurationError("top-k mode requires an embedder")
    results = query_vector(index, question_text, mode.k or 1, embedder)
    passages = [doc.paragraphs[r.paragraph_index].text for r in results]
    return passages, tuple((r.paragraph_index, r.score) for r in results)


def _parse_with_retry(
    raw: str, llm: LLMClient, prompt: str, config: GenerationConfig, tags: Mapping[str, str]
) -> tuple[Answer, str, str]:
    """Parse a response, retrying the identical prompt once on failure."""
    try:
        answer, rationale = parse_answer(raw)
        return answer, rationale, raw
    except UnparseableResponseError:
        retry = llm.complete(prompt, config, tags={**tags, "retry": "1"})
        answer, rationale = parse_answer(retry)
        return answer, rationale, retry


def assess_document(
    doc: TrialDocument,
    questionnaire: Questionnaire,
    index: ParagraphIndex,
    mode: ContextMode,
    llm: LLMClient,
    config: GenerationConfig,
    embedder: EmbedderInterface | None = None,
    oracle_evidence: Mapping[str, int] | None = None,
    fewshot_examples: Sequence = (),
    evaluation_keys=(),
) -> list[AssessmentItem]:
    """Answer all 22 questions for one document, honoring cascade gates."""
    items: list[AssessmentItem] = []
    answers_so_far: dict[str, Answer] = {}
    for q in questionnaire:
        try:
            active = is_active(q, answers_so_far)
        except SequencingError:
            items.append(
                AssessmentItem(
                    qid=q.qid,
                    answer=None,
                    model_answer=None,
                    error="antecedent unanswered after an earlier failure",
                )
            )
            continue
        if not active:
            answers_so_far[q.qid] = Answer.NOT_APPLICABLE
            items.append(AssessmentItem(qid=q.qid, answer=Answer.NOT_APPLICABLE, model_answer=None))
            continue

        tags = {"doc_id": doc.doc_id, "qid": q.qid}
        try:
            passages, evidence = _passages_for(
                doc, index, q.text, mode, embedder, oracle_evidence, q.qid
            )
            if fewshot_examples:
                prompt = build_fewshot_prompt(q, mode, passages, fewshot_examples, evaluation_keys)
            else:
                prompt = build_prompt(q, mode, passages)
            raw = llm.complete(prompt, config, tags=tags)
            answer, rationale, final_raw = _parse_with_retry(raw, llm, prompt, config, tags)
        except (LLMUpstreamError, UnparseableResponseError) as exc:
            items.append(AssessmentItem(qid=q.qid, answer=None, model_answer=None, error=str(exc)))
            continue

        model_answer = ModelAnswer(
            qid=q.qid,
            answer=answer,
            rationale=rationale,
            raw_response=final_raw,
            model_id=config.model,
            context_mode=str(mode),
            evidence=evidence,
        )
        answers_so_far[q.qid] = answer
        items.append(AssessmentItem(qid=q.qid, answer=answer, model_answer=model_answer))
    return items
