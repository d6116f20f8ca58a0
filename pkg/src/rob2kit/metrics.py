"""Scoring: 3-class aggregation, micro/macro F1, error severity, Cohen's kappa.

Labels collapse to three classes for scoring (yes/probably-yes,
no/probably-no, no-information); not_applicable is excluded from 3-class
scoring but kept as a fourth class for inter-rater kappa. Misclassification
severity: any error pair involving the no-information class is class 1
(milder); a direct polarity swap is class 2.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Hashable, Iterable, Mapping, Sequence

from .questionnaire import Answer


class Class3(str, Enum):
    YPY = "y_py"
    NPN = "n_pn"
    NI = "ni"


#: Fourth label used only for 4-class agreement statistics.
NA_LABEL = "na"

_CLASS3_OF_ANSWER = {
    Answer.YES: Class3.YPY,
    Answer.PROBABLY_YES: Class3.YPY,
    Answer.NO: Class3.NPN,
    Answer.PROBABLY_NO: Class3.NPN,
    Answer.NO_INFORMATION: Class3.NI,
}


def class3_of(answer: Answer) -> Class3 | None:
    """Collapse a five-option answer; None for not_applicable."""
    return _CLASS3_OF_ANSWER.get(answer)


def class4_of(answer: Answer) -> str:
    c = class3_of(answer)
    return NA_LABEL if c is None else c.value


@dataclass(frozen=True)
class BenchmarkItem:
    doc_id: str
    qid: str
    domain: int
    gold: Class3
    pred: Class3


@dataclass
class BenchmarkRun:
    model_id: str
    context_mode: str
    items: list[BenchmarkItem]
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class F1Report:
    per_domain: dict[int, float]
    micro: float
    macro: float  # unweighted mean of per-class F1 over the 3 classes
    macro_by_question: float  # unweighted mean of per-qid accuracy
    per_class: dict[str, float]
    n_per_domain: dict[int, int]
    n_total: int


def _micro_f1(pairs: Sequence[tuple[Class3, Class3]]) -> float:
    """Micro-F1 over pooled instances; equals accuracy for single-label tasks."""
    if not pairs:
        return 0.0
    correct = sum(1 for g, p in pairs if g == p)
    return correct / len(pairs)


def _per_class_f1(pairs: Sequence[tuple[Class3, Class3]]) -> dict[str, float]:
    """F1 per class; classes absent from both gold and prediction are skipped."""
    out = {}
    for cls in Class3:
        tp = sum(1 for g, p in pairs if g == cls and p == cls)
        fp = sum(1 for g, p in pairs if g != cls and p == cls)
        fn = sum(1 for g, p in pairs if g == cls and p != cls)
        if tp + fp + fn == 0:
            continue
        out[cls.value] = 2 * tp / (2 * tp + fp + fn)
    return out


def f1_scores(run: BenchmarkRun) -> F1Report:
    if not run.items:
        raise ValueError("cannot score an empty run")
    all_pairs = [(it.gold, it.pred) for it in run.items]
    per_domain = {}
    n_per_domain = {}
    for d in range(1, 6):
        pairs = [(it.gold, it.pred) for it in run.items if it.domain == d]
        n_per_domain[d] = len(pairs)
        if pairs:
            per_domain[d] = _micro_f1(pairs)
    per_class = _per_class_f1(all_pairs)
    macro = sum(per_class.values()) / len(per_class) if per_class else 0.0

    by_qid: dict[str, list[tuple[Class3, Class3]]] = {}
    for it in run.items:
        by_qid.setdefault(it.qid, []).append((it.gold, it.pred))
    macro_by_question = sum(_micro_f1(p) for p in by_qid.values()) / len(by_qid)

    return F1Report(
        per_domain=per_domain,
        micro=_micro_f1(all_pairs),
        macro=macro,
        macro_by_question=macro_by_question,
        per_class=per_class,
        n_per_domain=n_per_domain,
        n_total=len(all_pairs),
    )


@dataclass
class SeverityCounts:
    tp: int = 0
    fp_class1: int = 0
    fp_class2: int = 0
    fn_class1: int = 0
    fn_class2: int = 0


def error_severity(a: Class3, b: Class3) -> int:
    """1 when the confused pair involves NI, 2 for a YPY/NPN polarity swap."""
    if a == b:
        raise ValueError("not an error pair")
    return 1 if Class3.NI in (a, b) else 2


def severity_breakdown(run: BenchmarkRun) -> dict[str, SeverityCounts]:
    """Per-class TP plus FP/FN split by the severity of the confused class."""
    if not run.items:
        raise ValueError("cannot score an empty run")
    out = {cls.value: SeverityCounts() for cls in Class3}
    for it in run.items:
        if it.gold == it.pred:
            out[it.gold.value].tp += 1
            continue
        sev = error_severity(it.gold, it.pred)
        fp = out[it.pred.value]
        fn = out[it.gold.value]
        if sev == 1:
            fp.fp_class1 += 1
            fn.fn_class1 += 1
        else:
            fp.fp_class2 += 1
            fn.fn_class2 += 1
    return out


def cohens_kappa(a: Sequence[Hashable], b: Sequence[Hashable]) -> float:
    """Cohen's kappa with expected agreement from marginal products.

    Works over any label set (the 4-class case includes 'na'). Raises
    ValueError on empty or mismatched inputs.
    """
    if len(a) != len(b):
        raise ValueError(f"label vectors differ in length: {len(a)} vs {len(b)}")
    n = len(a)
    if n == 0:
        raise ValueError("cannot compute kappa over zero items")
    observed = sum(1 for x, y in zip(a, b) if x == y) / n
    ca, cb = Counter(a), Counter(b)
    expected = sum(ca[label] * cb.get(label, 0) for label in ca) / (n * n)
    if expected == 1.0:
        return 1.0
    return (observed - expected) / (1.0 - expected)


def answer_vectors_for_kappa(
    answers_a: Mapping[str, Answer], answers_b: Mapping[str, Answer], qids: Iterable[str]
) -> tuple[list[str], list[str]]:
    """Aligned 4-class label vectors for two raters over the given questions."""
    va, vb = [], []
    for qid in qids:
        va.append(class4_of(answers_a[qid]))
        vb.append(class4_of(answers_b[qid]))
    return va, vb
