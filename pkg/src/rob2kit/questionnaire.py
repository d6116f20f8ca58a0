"""The ROB2 instrument: questions, answer options, and cascade gates.

The instrument ships as a data file (``data/questionnaire.json``) rather
than code so that corrected or translated instruments can be swapped in
without a rebuild. Gates store their admissible answers as explicit
five-option subsets; NotApplicable in an antecedent fails every admissible
set, so a skipped question can never activate a dependent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Iterator, Mapping

from .errors import QuestionnaireSchemaError, SequencingError

DOMAIN_SIZES = {1: 3, 2: 7, 3: 4, 4: 5, 5: 3}


class Answer(str, Enum):
    YES = "yes"
    PROBABLY_YES = "probably_yes"
    PROBABLY_NO = "probably_no"
    NO = "no"
    NO_INFORMATION = "no_information"
    NOT_APPLICABLE = "not_applicable"


#: Options a model or a user may assign; NOT_APPLICABLE only arises from gating.
ASSIGNABLE_ANSWERS = (
    Answer.YES,
    Answer.PROBABLY_YES,
    Answer.PROBABLY_NO,
    Answer.NO,
    Answer.NO_INFORMATION,
)


@dataclass(frozen=True)
class CascadeGate:
    antecedents: tuple[tuple[str, frozenset[Answer]], ...]
    combinator: str  # "any" | "all"


@dataclass(frozen=True)
class SignalingQuestion:
    qid: str
    domain: int
    text: str
    elaboration: str
    gate: CascadeGate | None = None


@dataclass(frozen=True)
class Questionnaire:
    questions: tuple[SignalingQuestion, ...]
    version: str

    def __iter__(self) -> Iterator[SignalingQuestion]:
        return iter(self.questions)

    def by_qid(self, qid: str) -> SignalingQuestion:
        for q in self.questions:
            if q.qid == qid:
                return q
        raise KeyError(qid)

    def domain_questions(self, domain: int) -> list[SignalingQuestion]:
        return [q for q in self.questions if q.domain == domain]

    @property
    def qids(self) -> list[str]:
        return [q.qid for q in self.questions]


def _parse_gate(qid: str, raw: Mapping[str, Any] | None) -> CascadeGate | None:
    if raw is None:
        return None
    combinator = raw.get("combinator")
    if combinator not in ("any", "all"):
        raise QuestionnaireSchemaError(f"question {qid}: gate combinator must be 'any' or 'all'")
    antecedents = []
    for ant in raw.get("antecedents", []):
        allowed = frozenset(Answer(a) for a in ant["allowed"])
        if Answer.NOT_APPLICABLE in allowed:
            raise QuestionnaireSchemaError(
                f"question {qid}: gate may not admit not_applicable"
            )
        antecedents.append((ant["qid"], allowed))
    if not antecedents:
        raise QuestionnaireSchemaError(f"question {qid}: gate has no antecedents")
    return CascadeGate(antecedents=tuple(antecedents), combinator=combinator)


def _validate(questions: list[SignalingQuestion]) -> None:
    seen: set[str] = set()
    order: dict[str, int] = {}
    for pos, q in enumerate(questions):
        if q.qid in seen:
            raise QuestionnaireSchemaError(f"duplicate qid {q.qid}")
        seen.add(q.qid)
        order[q.qid] = pos
        parts = q.qid.split(".")
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise QuestionnaireSchemaError(f"qid {q.qid!r} is not of the form D.N")
        if int(parts[0]) != q.domain:
            raise QuestionnaireSchemaError(f"question {q.qid}: domain field {q.domain} mismatch")
        if not q.elaboration.strip():
            raise QuestionnaireSchemaError(f"question {q.qid}: empty elaboration")
    for domain, expected in DOMAIN_SIZES.items():
        got = sum(1 for q in questions if q.domain == domain)
        if got != expected:
            raise QuestionnaireSchemaError(
                f"domain {domain} expects {expected} questions, found {got}"
            )
    for q in questions:
        if q.gate is None:
            continue
        for ant_qid, _ in q.gate.antecedents:
            if ant_qid not in seen:
                raise QuestionnaireSchemaError(
                    f"question {q.qid}: gate references unknown qid {ant_qid}"
                )
            ant = next(x for x in questions if x.qid == ant_qid)
            if ant.domain != q.domain:
                raise QuestionnaireSchemaError(
                    f"question {q.qid}: cross-domain gate on {ant_qid}"
                )
            if order[ant_qid] >= order[q.qid]:
                raise QuestionnaireSchemaError(
                    f"question {q.qid}: gate antecedent {ant_qid} does not precede it"
                )


def load_questionnaire(path: str | Path | None = None) -> Questionnaire:
    """Load and validate a questionnaire file; ``None`` loads the bundled one."""
    if path is None:
        text = resources.files("rob2kit").joinpath("data/questionnaire.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise QuestionnaireSchemaError(f"invalid questionnaire JSON: {exc}") from exc

    questions = []
    for item in raw["questions"]:
        questions.append(
            SignalingQuestion(
                qid=item["qid"],
                domain=int(item["domain"]),
                text=item["text"],
                elaboration=item["elaboration"],
                gate=_parse_gate(item["qid"], item.get("gate")),
            )
        )
    _validate(questions)
    return Questionnaire(questions=tuple(questions), version=raw.get("version", "unversioned"))


def is_active(q: SignalingQuestion, answers_so_far: Mapping[str, Answer]) -> bool:
    """True iff the question should be asked given earlier answers.

    Raises SequencingError when a gate antecedent has not been answered yet.
    """
    if q.gate is None:
        return True
    hits = []
    for ant_qid, allowed in q.gate.antecedents:
        if ant_qid not in answers_so_far:
            raise SequencingError(f"question {q.qid}: antecedent {ant_qid} unanswered")
        hits.append(answers_so_far[ant_qid] in allowed)
    return any(hits) if q.gate.combinator == "any" else all(hits)


def enumerate_gate_consistent(
    questionnaire: Questionnaire, domain: int
) -> Iterator[dict[str, Answer]]:
    """Yield every answer assignment for a domain that respects cascade gates.

    Gated-off questions carry NOT_APPLICABLE. Bounded by 5^n per domain,
    which is small enough to enumerate exhaustively.
    """
    questions = questionnaire.domain_questions(domain)

    def rec(i: int, acc: dict[str, Answer]) -> Iterator[dict[str, Answer]]:
        if i == len(questions):
            yield dict(acc)
            return
        q = questions[i]
        if is_active(q, acc):
            for ans in ASSIGNABLE_ANSWERS:
                acc[q.qid] = ans
                yield from rec(i + 1, acc)
            del acc[q.qid]
        else:
            acc[q.qid] = Answer.NOT_APPLICABLE
            yield from rec(i + 1, acc)
            del acc[q.qid]

    yield from rec(0, {})
