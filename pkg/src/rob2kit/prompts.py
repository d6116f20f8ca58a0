"""Prompt rendering and answer parsing for the signaling-question QA step.

Rendering is byte-deterministic: the same inputs always produce the same
prompt, and golden-file tests pin the exact layout. The few-shot variant
drops the elaboration and appends ``Answer:<label>`` to each example block.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Collection, Sequence

from .documents import TrialDocument
from .errors import ContaminationError
from .questionnaire import Answer, SignalingQuestion

INSTRUCTION = (
    "You are an expert scientific researcher. You will be given a passage from a "
    "scientific paper reporting on a randomized controlled trial along with a "
    "question and elaboration of the question. Your task is to return the answer "
    'to the question out of the following set of answers: "yes", "no", '
    '"probably yes", "probably no", "no information". You should use the given '
    "passage to answer the question."
)

#: Canonical labels as they appear in prompts and model responses.
LABEL_OF_ANSWER = {
    Answer.YES: "yes",
    Answer.PROBABLY_YES: "probably yes",
    Answer.PROBABLY_NO: "probably no",
    Answer.NO: "no",
    Answer.NO_INFORMATION: "no information",
}
ANSWER_OF_LABEL = {v: k for k, v in LABEL_OF_ANSWER.items()}

# Longer labels first so "probably yes" wins over "yes" and "no information"
# over "no" at the same position.
_LABEL_RE = re.compile(
    r"\b(probably\s+yes|probably\s+no|no\s+information|yes|no)\b", re.IGNORECASE
)


@dataclass(frozen=True)
class ContextMode:
    """Evidence context for a question: oracle passage, top-k retrieval, or full paper."""

    kind: str  # "oracle" | "topk" | "full"
    k: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("oracle", "topk", "full"):
            raise ValueError(f"unknown context mode {self.kind!r}")
        if self.kind == "topk" and (self.k is None or self.k < 1):
            raise ValueError("topk mode requires k >= 1")

    def __str__(self) -> str:
        return f"topk:{self.k}" if self.kind == "topk" else self.kind

    @classmethod
    def parse(cls, spec: str) -> "ContextMode":
        spec = spec.strip().lower()
        if spec == "oracle":
            return cls("oracle")
        if spec in ("full", "fullpaper", "full_paper"):
            return cls("full")
        if spec.startswith("topk:"):
            return cls("topk", k=int(spec.split(":", 1)[1]))
        raise ValueError(f"cannot parse context mode {spec!r}")


@dataclass(frozen=True)
class FewshotExample:
    doc_id: str
    qid: str
    question_text: str
    passage: str
    label: Answer


@dataclass(frozen=True)
class PromptSpec:
    instruction: str
    question: str
    elaboration: str | None
    passages: tuple[str, ...]
    fewshot_examples: tuple[FewshotExample, ...] = ()


def full_paper_passages(doc: TrialDocument) -> list[str]:
    """All paragraphs in document order, each prefixed by its section header."""
    out = []
    for p in doc.paragraphs:
        out.append(f"{p.section_header}\n{p.text}" if p.section_header else p.text)
    return out


def _question_block(question_text: str, passages: Sequence[str]) -> str:
    body = "\n\n".join(passages)
    return f'Question: "{question_text}"\n\nPassage(s):\n{body}'


def render(spec: PromptSpec) -> str:
    parts = [spec.instruction]
    for ex in spec.fewshot_examples:
        parts.append(
            _question_block(ex.question_text, [ex.passage])
            + f"\n\nAnswer:{LABEL_OF_ANSWER[ex.label]}"
        )
    if spec.elaboration is not None:
        parts.append(
            f'Question: "{spec.question}"\n\nElaboration: "{spec.elaboration}"\n\n'
            + "Passage(s):\n"
            + "\n\n".join(spec.passages)
        )
    else:
        parts.append(_question_block(spec.question, spec.passages))
    return "\n\n".join(parts)


def build_prompt(q: SignalingQuestion, mode: ContextMode, passages: Sequence[str]) -> str:
    """Zero-shot prompt: instruction, question, elaboration, passages in order."""
    if mode.kind in ("oracle", "topk") and not passages:
        raise ValueError(f"{mode} mode requires at least one passage")
    spec = PromptSpec(
        instruction=INSTRUCTION,
        question=q.text,
        elaboration=q.elaboration,
        passages=tuple(passages),
    )
    return render(spec)


def build_fewshot_prompt(
    q: SignalingQuestion,
    mode: ContextMode,
    passages: Sequence[str],
    examples: Sequence[FewshotExample],
    evaluation_keys: Collection[tuple[str, str]] = (),
) -> str:
    """Few-shot prompt: answered example blocks, then the target question.

    The elaboration is omitted. ``evaluation_keys`` is the caller-supplied
    exclusion list of (doc_id, qid) pairs; drawing an example from it raises
    ContaminationError.
    """
    if mode.kind in ("oracle", "topk") and not passages:
        raise ValueError(f"{mode} mode requires at least one passage")
    excluded = set(evaluation_keys)
    for ex in examples:
        if (ex.doc_id, ex.qid) in excluded:
            raise ContaminationError(
                f"few-shot example ({ex.doc_id}, {ex.qid}) is in the evaluation set"
            )
    spec = PromptSpec(
        instruction=INSTRUCTION,
        question=q.text,
        elaboration=None,
        passages=tuple(passages),
        fewshot_examples=tuple(examples),
    )
    return render(spec)


def parse_answer(raw: str) -> tuple[Answer, str]:
    """Extract the first canonical label and the trailing rationale.

    Longer labels match before shorter ones at the same position. The
    rationale is the remainder of the response after the matched label,
    stripped of leading separators. Raises UnparseableResponseError when no
    label occurs anywhere in the response.
    """
    from .errors import UnparseableResponseError

    match = _LABEL_RE.search(raw)
    if match is None:
        raise UnparseableResponseError(
            f"no canonical answer label in response: {raw[:120]!r}"
        )
    label = re.sub(r"\s+", " ", match.group(1).lower())
    rationale = raw[match.end():].lstrip(" \t\r\n.:,;-")
    return ANSWER_OF_LABEL[label], rationale.strip()
