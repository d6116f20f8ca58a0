"""Deterministic generator for the bundled reference benchmark release.

The upstream annotated corpus is not redistributable with this repository,
so the evaluation harness ships with a synthetic release engineered to the
same published summary statistics: the risk-judgment distribution table,
the per-domain usage/feedback counts, the dual-annotation agreement level,
and the retrieval recall profile (via sidecar vectors and document texts
constructed so every gold passage lands at a designated rank). Everything
is derived from one seed, so repeated generation is byte-reproducible.

The statistical targets live in this module as frozen constants; the
acceptance suite checks that the public CLI reproduces them from the
generated release alone.
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .documents import Paragraph, TrialDocument, document_to_dict
from .embedders import SidecarVectors
from .metrics import class4_of, cohens_kappa
from .pipeline import ModelAnswer
from .prompts import LABEL_OF_ANSWER
from .questionnaire import Answer, Questionnaire, enumerate_gate_consistent, load_questionnaire
from .retrieval import tokenize
from .rules import RiskLevel, domain_judgment, load_default_tables, overall_judgment
from .store import (
    STATUS_COMPLETE,
    STATUS_IN_PROGRESS,
    AssessmentSession,
    QuestionRecord,
    session_to_dict,
)
from .utils import canonical_dumps

DEFAULT_SEED = 770421

N_PAPERS = 521
N_MANUAL = 245
N_ASSISTED = 276
N_IAA = 20

# Target distribution of stored judgments (per domain: low / some_concerns /
# high). Domains 3 and 4 sum to one less than the paper count because one
# assisted assessment is unfinished and carries no judgment there.
DISTRIBUTION_TARGET = {
    1: (234, 243, 44),
    2: (287, 171, 63),
    3: (450, 35, 35),
    4: (406, 60, 54),
    5: (215, 272, 34),
}
OVERALL_TARGET = (64, 301, 156)

# Usage targets over the completed tool-assisted assessments.
ASSISTED_ANSWERED = {1: 767, 2: 1441, 3: 663, 4: 916, 5: 764}
EXPERT_ANSWERS = {1: 390, 2: 588, 3: 231, 4: 325, 5: 396}
EXPERT_RATIONALES = {1: 337, 2: 324, 3: 169, 4: 199, 5: 279}
UPVOTE_QUESTIONS = {1: 207, 2: 120, 3: 48, 4: 64, 5: 41}
DOWNVOTE_QUESTIONS = {1: 43, 2: 40, 3: 12, 4: 22, 5: 18}
ADDED_QUESTIONS = {1: 74, 2: 84, 3: 24, 4: 112, 5: 62}
UP_AND_ADDED_OVERLAP = {1: 25, 2: 20, 3: 5, 4: 16, 5: 10}

# Answered-question and gold-evidence targets over the manual subset.
MANUAL_ANSWERED = {1: 735, 2: 1278, 3: 598, 4: 1027, 5: 735}
MANUAL_GOLD = {1: 197, 2: 124, 3: 37, 4: 73, 5: 11}

# Designated retrieval rank multisets over all 1202 gold-evidence questions.
# rank 12 stands for "outside the top 10".
EMBED_RANK_COUNTS = {1: 322, 2: 113, 3: 112, 4: 39, 5: 38, 6: 39, 7: 38, 8: 38, 9: 38, 10: 38, 12: 387}
BM25_RANK_COUNTS = {1: 168, 2: 80, 3: 79, 4: 57, 5: 57, 6: 40, 7: 40, 8: 40, 9: 40, 10: 40, 12: 561}

KAPPA_WINDOW = (0.395, 0.405)

EMBED_MODEL_ID = "ref-embed-64d-v1"
EMBED_DIM = 64
ASSISTED_MODEL_ID = "gpt-3.5-turbo-0125"
ASSISTED_MODE = "topk:3"
PARA_TOKENS = 40

LEVELS = (RiskLevel.LOW, RiskLevel.SOME_CONCERNS, RiskLevel.HIGH)

# Questions that are never gate antecedents; dropping one of their records
# cannot leave a dependent question unexplained.
DROPPABLE_QIDS = {
    1: ["1.1", "1.2", "1.3"],
    2: ["2.5", "2.7"],
    3: ["3.4"],
    4: ["4.5"],
    5: ["5.1", "5.2", "5.3"],
}


def _doc_id(i: int) -> str:
    return f"trial-{i:04d}"


@dataclass(eq=False)
class _SessionDraft:
    doc_id: str
    session_id: str
    annotator_id: str
    provenance: str
    is_iaa_duplicate: bool = False
    partial: bool = False
    answers: dict[str, Answer] = field(default_factory=dict)
    dropped: set[str] = field(default_factory=set)
    domain_levels: dict[int, RiskLevel] = field(default_factory=dict)
    overall: RiskLevel | None = None
    expert_answer: set[str] = field(default_factory=set)
    expert_rationale: set[str] = field(default_factory=set)
    up_marked: set[str] = field(default_factory=set)
    down_marked: set[str] = field(default_factory=set)
    added_marked: set[str] = field(default_factory=set)
    gold: dict[str, int] = field(default_factory=dict)  # qid -> paragraph index
    evidence: dict[str, list[int]] = field(default_factory=dict)
    added_extra: dict[str, int] = field(default_factory=dict)  # up+added records

    def domains_present(self) -> list[int]:
        return [d for d in range(1, 6) if not (self.partial and d in (3, 4))]


class _Pools:
    """Gate-consistent answer patterns per (domain, judgment, NA count)."""

    def __init__(self, questionnaire: Questionnaire):
        tables = load_default_tables()
        self.by_level: dict[int, dict[RiskLevel, dict[int, list[dict[str, Answer]]]]] = {}
        for d in range(1, 6):
            per_level: dict[RiskLevel, dict[int, list[dict[str, Answer]]]] = {
                lv: defaultdict(list) for lv in LEVELS
            }
            for assignment in enumerate_gate_consistent(questionnaire, d):
                level = domain_judgment(tables[d], assignment)
                na = sum(1 for a in assignment.values() if a is Answer.NOT_APPLICABLE)
                per_level[level][na].append(dict(assignment))
            self.by_level[d] = per_level

    def na_options(self, domain: int, level: RiskLevel) -> list[int]:
        return sorted(self.by_level[domain][level])

    def pick(self, domain: int, level: RiskLevel, na: int, rng: random.Random) -> dict[str, Answer]:
        return dict(rng.choice(self.by_level[domain][level][na]))

    def pick_any(self, domain: int, level: RiskLevel, rng: random.Random) -> dict[str, Answer]:
        options = self.na_options(domain, level)
        return self.pick(domain, level, rng.choice(options), rng)


# ---------------------------------------------------------------------------
# Stage 1: reliability subset with engineered agreement


def _weighted_level(rng: random.Random, domain: int) -> RiskLevel:
    low, sc, high = DISTRIBUTION_TARGET[domain]
    return rng.choices(LEVELS, weights=(low, sc, high))[0]


def _build_iaa_sessions(
    questionnaire: Questionnaire, pools: _Pools, rng: random.Random, doc_ids: list[str]
) -> tuple[list[_SessionDraft], list[_SessionDraft], float]:
    tables = load_default_tables()
    raters_one: list[_SessionDraft] = []
    raters_two: list[_SessionDraft] = []
    for doc_id in doc_ids:
        a = _SessionDraft(doc_id, f"s-{doc_id}", "rater-1", "assisted")
        b = _SessionDraft(doc_id, f"s-{doc_id}-r2", "rater-2", "assisted", is_iaa_duplicate=True)
        for d in range(1, 6):
            level = _weighted_level(rng, d)
            a.answers.update(pools.pick_any(d, level, rng))
            if rng.random() < 0.5:
                b.answers.update(pools.pick_any(d, _weighted_level(rng, d), rng))
            else:
                b.answers.update({q: a.answers[q] for q in a.answers if q.startswith(f"{d}.")})
        raters_one.append(a)
        raters_two.append(b)

    qids = questionnaire.qids
    tweakable = [q for qs in DROPPABLE_QIDS.values() for q in qs]

    def kappa_now() -> float:
        va, vb = [], []
        for a, b in zip(raters_one, raters_two):
            for qid in qids:
                va.append(class4_of(a.answers[qid]))
                vb.append(class4_of(b.answers[qid]))
        return cohens_kappa(va, vb)

    positions = [
        (i, qid)
        for i in range(len(raters_one))
        for qid in tweakable
        if raters_two[i].answers[qid] is not Answer.NOT_APPLICABLE
    ]
    rng.shuffle(positions)
    lo, hi = KAPPA_WINDOW
    for _ in range(2000):
        k = kappa_now()
        if lo <= k <= hi:
            break
        moved = False
        for i, qid in positions:
            a_ans = raters_one[i].answers[qid]
            b_ans = raters_two[i].answers[qid]
            if k > hi and class4_of(a_ans) == class4_of(b_ans):
                choices = [
                    x
                    for x in (Answer.YES, Answer.NO, Answer.NO_INFORMATION)
                    if class4_of(x) != class4_of(a_ans)
                ]
                raters_two[i].answers[qid] = rng.choice(choices)
                moved = True
                break
            if (
                k < lo
                and a_ans is not Answer.NOT_APPLICABLE
                and class4_of(a_ans) != class4_of(b_ans)
            ):
                raters_two[i].answers[qid] = a_ans
                moved = True
                break
        if not moved:
            raise AssertionError("agreement tuning ran out of tweakable positions")
    final = kappa_now()
    assert lo <= final <= hi, f"agreement {final} outside target window"

    for draft in raters_one + raters_two:
        draft.domain_levels = {
            d: domain_judgment(tables[d], draft.answers) for d in range(1, 6)
        }
        draft.overall = overall_judgment(draft.domain_levels)
    return raters_one, raters_two, final


# ---------------------------------------------------------------------------
# Stage 2: deal judgment levels for the remaining papers


def _deal_levels(
    rng: random.Random, iaa_primary: list[_SessionDraft]
) -> tuple[list[str], dict[tuple[int, int], RiskLevel], int]:
    """Assign a row type and per-domain levels to the 501 non-reliability papers."""
    n_rows = N_PAPERS - N_IAA

    overall_budget = {
        RiskLevel.LOW: OVERALL_TARGET[0],
        RiskLevel.SOME_CONCERNS: OVERALL_TARGET[1],
        RiskLevel.HIGH: OVERALL_TARGET[2],
    }
    domain_budget = {
        d: {
            RiskLevel.LOW: DISTRIBUTION_TARGET[d][0],
            RiskLevel.SOME_CONCERNS: DISTRIBUTION_TARGET[d][1],
            RiskLevel.HIGH: DISTRIBUTION_TARGET[d][2],
        }
        for d in range(1, 6)
    }
    for draft in iaa_primary:
        overall_budget[draft.overall] -= 1
        for d, lv in draft.domain_levels.items():
            domain_budget[d][lv] -= 1
    for lv, remaining in overall_budget.items():
        assert remaining >= 0, f"overall budget exhausted for {lv}"
    for d in range(1, 6):
        for lv, remaining in domain_budget[d].items():
            assert remaining >= 0, f"domain {d} budget exhausted for {lv}"

    types = (
        ["low"] * overall_budget[RiskLevel.LOW]
        + ["sc"] * overall_budget[RiskLevel.SOME_CONCERNS]
        + ["high"] * overall_budget[RiskLevel.HIGH]
    )
    assert len(types) == n_rows
    rng.shuffle(types)
    # the unfinished assessment is the last assisted paper and must be a
    # some-concerns row (its 3 present judgments cannot contain a high)
    partial_row = n_rows - 1
    if types[partial_row] != "sc":
        swap = types.index("sc")
        types[partial_row], types[swap] = types[swap], types[partial_row]

    levels: dict[tuple[int, int], RiskLevel] = {}
    high_rows = [i for i, t in enumerate(types) if t == "high"]
    sc_rows = [partial_row] + [i for i, t in enumerate(types) if t == "sc" and i != partial_row]

    pointer = 0
    for d in range(1, 6):
        budget = domain_budget[d][RiskLevel.HIGH]
        assert budget <= len(high_rows)
        for _ in range(budget):
            row = high_rows[pointer % len(high_rows)]
            pointer += 1
            assert (row, d) not in levels
            levels[(row, d)] = RiskLevel.HIGH
    assert sum(domain_budget[d][RiskLevel.HIGH] for d in range(1, 6)) >= len(high_rows)

    pointer = 0
    placed_sc = 0
    for d in range(1, 6):
        budget = domain_budget[d][RiskLevel.SOME_CONCERNS]
        slots = len(sc_rows) - (1 if d in (3, 4) else 0)
        assert budget <= slots, f"domain {d} some-concerns budget exceeds sc rows"
        count = 0
        while count < budget:
            row = sc_rows[pointer % len(sc_rows)]
            pointer += 1
            if row == partial_row and d in (3, 4):
                continue
            assert (row, d) not in levels
            levels[(row, d)] = RiskLevel.SOME_CONCERNS
            count += 1
            placed_sc += 1

    for row in sc_rows:
        has_sc = any(levels.get((row, d)) is RiskLevel.SOME_CONCERNS for d in range(1, 6))
        assert has_sc, f"some-concerns row {row} received no some-concerns judgment"

    low_used = {d: 0 for d in range(1, 6)}
    for row in range(n_rows):
        for d in range(1, 6):
            if row == partial_row and d in (3, 4):
                continue
            if (row, d) not in levels:
                levels[(row, d)] = RiskLevel.LOW
                low_used[d] += 1
    for d in range(1, 6):
        assert low_used[d] == domain_budget[d][RiskLevel.LOW], (
            d,
            low_used[d],
            domain_budget[d][RiskLevel.LOW],
        )
    return types, levels, partial_row


def _deal_is_feasible(
    candidate: tuple[list[str], dict[tuple[int, int], RiskLevel], int],
    pools: _Pools,
    questionnaire: Questionnaire,
    iaa_na: dict[int, int],
) -> bool:
    """Check that each subset's NA budget is reachable for the gated domains.

    Domains 1 and 5 have no gated questions: their NA budget is met by
    dropping records instead, so only non-negativity matters there.
    """
    types, levels, partial_row = candidate
    n_rows = len(types)
    manual_rows = range(N_MANUAL)
    assisted_rows = [r for r in range(N_MANUAL, n_rows) if r != partial_row]
    for d in range(1, 6):
        n_q = len(questionnaire.domain_questions(d))
        subsets = (
            (list(manual_rows), N_MANUAL, MANUAL_ANSWERED[d], 0),
            (assisted_rows, len(assisted_rows) + N_IAA, ASSISTED_ANSWERED[d], iaa_na[d]),
        )
        for rows, n_sessions, target_answered, extra_na in subsets:
            needed = n_sessions * n_q - target_answered - extra_na
            if needed < 0:
                return False
            lo = sum(pools.na_options(d, levels[(r, d)])[0] for r in rows)
            hi = sum(pools.na_options(d, levels[(r, d)])[-1] for r in rows)
            if d in (2, 3, 4) and not (lo <= needed <= hi):
                return False
            if d in (1, 5) and needed < lo:
                return False
    return True


# ---------------------------------------------------------------------------
# Stage 3: answer patterns with tuned not-applicable counts


def _assign_patterns(
    drafts: list[_SessionDraft],
    domain: int,
    needed_na: int,
    pools: _Pools,
    rng: random.Random,
) -> int:
    """Choose per-session patterns so NA counts sum as close to needed_na as
    possible without exceeding it. Returns the shortfall (handled by record
    drops)."""
    rows = [d for d in drafts if domain in d.domains_present()]
    min_na = []
    max_na = []
    for draft in rows:
        opts = pools.na_options(domain, draft.domain_levels[domain])
        min_na.append(opts[0])
        max_na.append(opts[-1])
    suffix_min = [0] * (len(rows) + 1)
    suffix_max = [0] * (len(rows) + 1)
    for i in range(len(rows) - 1, -1, -1):
        suffix_min[i] = suffix_min[i + 1] + min_na[i]
        suffix_max[i] = suffix_max[i + 1] + max_na[i]
    assert needed_na >= suffix_min[0], (
        f"domain {domain}: target NA {needed_na} below structural minimum {suffix_min[0]}"
    )

    placed = 0
    for i, draft in enumerate(rows):
        level = draft.domain_levels[domain]
        opts = pools.na_options(domain, level)
        lo = needed_na - placed - suffix_max[i + 1]
        hi = needed_na - placed - suffix_min[i + 1]
        feasible = [v for v in opts if lo <= v <= hi]
        if not feasible:
            feasible = [v for v in opts if v <= hi] or [opts[0]]
        remaining = max(1, len(rows) - i)
        ideal = (needed_na - placed) / remaining
        choice = min(feasible, key=lambda v: (abs(v - ideal), v))
        placed += choice
        draft.answers.update(pools.pick(domain, level, choice, rng))
    shortfall = needed_na - placed
    assert shortfall >= 0, f"domain {domain}: overshot NA target by {-shortfall}"
    return shortfall


def _drop_records(
    drafts: list[_SessionDraft], domain: int, count: int, rng: random.Random
) -> None:
    if count == 0:
        return
    candidates = [
        (draft, qid)
        for draft in drafts
        for qid in DROPPABLE_QIDS[domain]
        if draft.answers.get(qid) not in (None, Answer.NOT_APPLICABLE)
        and qid not in draft.dropped
    ]
    assert len(candidates) >= count, f"domain {domain}: not enough droppable records"
    rng.shuffle(candidates)
    for draft, qid in candidates[:count]:
        draft.dropped.add(qid)


# ---------------------------------------------------------------------------
# Stage 4: usage marks


def _answered_keys(drafts: list[_SessionDraft], domain: int) -> list[tuple[_SessionDraft, str]]:
    keys = []
    for draft in drafts:
        for qid, ans in sorted(draft.answers.items()):
            if int(qid.split(".")[0]) != domain:
                continue
            if ans is Answer.NOT_APPLICABLE or qid in draft.dropped:
                continue
            keys.append((draft, qid))
    return keys


def _apply_usage_marks(
    complete_assisted: list[_SessionDraft], rng: random.Random
) -> None:
    for d in range(1, 6):
        keys = _answered_keys(complete_assisted, d)
        assert len(keys) == ASSISTED_ANSWERED[d], (d, len(keys), ASSISTED_ANSWERED[d])

        order = list(keys)
        rng.shuffle(order)
        for draft, qid in order[: EXPERT_ANSWERS[d]]:
            draft.expert_answer.add(qid)
        order = list(keys)
        rng.shuffle(order)
        for draft, qid in order[: EXPERT_RATIONALES[d]]:
            draft.expert_rationale.add(qid)

        order = list(keys)
        rng.shuffle(order)
        ups = order[: UPVOTE_QUESTIONS[d]]
        overlap = ups[: UP_AND_ADDED_OVERLAP[d]]
        up_set = set(ups)
        rest = [k for k in order if k not in up_set]
        added_only = rest[: ADDED_QUESTIONS[d] - UP_AND_ADDED_OVERLAP[d]]
        added_set = set(added_only)
        downs = [k for k in rest if k not in added_set][: DOWNVOTE_QUESTIONS[d]]
        assert len(downs) == DOWNVOTE_QUESTIONS[d]
        for draft, qid in ups:
            draft.up_marked.add(qid)
        for draft, qid in overlap + added_only:
            draft.added_marked.add(qid)
        for draft, qid in downs:
            draft.down_marked.add(qid)


def _mark_manual_gold(manual: list[_SessionDraft], rng: random.Random) -> None:
    for d in range(1, 6):
        keys = _answered_keys(manual, d)
        assert len(keys) == MANUAL_ANSWERED[d], (d, len(keys), MANUAL_ANSWERED[d])
        rng.shuffle(keys)
        for draft, qid in keys[: MANUAL_GOLD[d]]:
            draft.added_marked.add(qid)  # manual gold is stored as an added paragraph


# ---------------------------------------------------------------------------
# Stage 5: documents, vectors, evidence backfill


def _make_lexicon(rng: random.Random, questionnaire: Questionnaire, size: int = 700) -> list[str]:
    reserved = set()
    for q in questionnaire:
        reserved.update(tokenize(q.text))
    consonants = "bcdfghjklmnpqrstvz"
    vowels = "aeiou"
    lexicon: list[str] = []
    seen = set(reserved)
    while len(lexicon) < size:
        word = "".join(
            rng.choice(consonants) + rng.choice(vowels)
            for _ in range(rng.randint(2, 4))
        )
        if word not in seen:
            seen.add(word)
            lexicon.append(word)
    return lexicon


_SECTIONS = ["Introduction", "Methods", "Methods", "Results", "Results", "Discussion"]


@dataclass
class _GoldPlan:
    qid: str
    emb_rank: int
    bm25_rank: int
    signal_terms: list[str]
    gold_index: int = -1


def _signal_terms_for(qid: str, instance_qids: list[str], questionnaire: Questionnaire) -> list[str]:
    mine = tokenize(questionnaire.by_qid(qid).text)
    others: set[str] = set()
    for other in instance_qids:
        if other != qid:
            others.update(tokenize(questionnaire.by_qid(other).text))
    unique = [t for t in mine if t not in others]
    unique.sort(key=lambda t: (-len(t), t))
    assert unique, f"no distinctive query token for {qid} among {instance_qids}"
    return unique[:2]


def _build_document(
    doc_id: str,
    plans: list[_GoldPlan],
    lexicon: list[str],
    rng: random.Random,
    np_rng: np.random.Generator,
    qid_dim: dict[str, int],
) -> tuple[TrialDocument, np.ndarray]:
    def filler(n: int) -> list[str]:
        return [rng.choice(lexicon) for _ in range(n)]

    def sentence(tokens: list[str]) -> str:
        text = " ".join(tokens)
        return text[0].upper() + text[1:] + "."

    # body slots: ("gold", plan) / ("emb", plan, j) / ("bm25", plan) / ("pad",)
    slots: list[tuple] = []
    for plan in plans:
        slots.append(("gold", plan))
        for j in range(plan.emb_rank - 1):
            slots.append(("emb", plan, j))
        for _ in range(plan.bm25_rank - 1):
            slots.append(("bm25", plan))
    padding = rng.randint(6, 12)
    for _ in range(padding):
        slots.append(("pad",))
    while len(slots) < 14:
        slots.append(("pad",))
    rng.shuffle(slots)

    n = len(slots) + 1  # abstract paragraph at index 0
    paragraphs = [Paragraph(0, "Abstract", sentence(filler(PARA_TOKENS)))]
    coeffs = np.zeros((n, EMBED_DIM), dtype=np.float64)
    emb_rank_of: dict[int, tuple[_GoldPlan, int]] = {}

    for pos, slot in enumerate(slots, start=1):
        kind = slot[0]
        section = _SECTIONS[pos % len(_SECTIONS)]
        if kind == "gold":
            plan = slot[1]
            tokens = filler(PARA_TOKENS - len(plan.signal_terms)) + list(plan.signal_terms)
            rng.shuffle(tokens)
            plan.gold_index = pos
        elif kind == "bm25":
            plan = slot[1]
            tokens = filler(PARA_TOKENS - 3 * len(plan.signal_terms))
            for term in plan.signal_terms:
                tokens.extend([term] * 3)
            rng.shuffle(tokens)
        elif kind == "emb":
            plan, j = slot[1], slot[2]
            tokens = filler(PARA_TOKENS)
            emb_rank_of[pos] = (plan, j)
        else:
            tokens = filler(PARA_TOKENS)
        paragraphs.append(Paragraph(pos, section, sentence(tokens)))

    # embedding coefficients in the per-question dimensions
    for plan in plans:
        dim = qid_dim[plan.qid]
        for pos in range(n):
            coeffs[pos, dim] = 0.02 + 0.08 * pos / max(n - 1, 1)
        coeffs[plan.gold_index, dim] = 0.5
    for pos, (plan, j) in emb_rank_of.items():
        coeffs[pos, qid_dim[plan.qid]] = 0.92 - 0.004 * j

    vectors = np.zeros((n, EMBED_DIM), dtype=np.float64)
    vectors[:, : len(qid_dim)] = coeffs[:, : len(qid_dim)]
    for pos in range(n):
        used = float(np.sum(coeffs[pos] ** 2))
        assert used < 0.999, f"{doc_id} paragraph {pos}: signal mass {used} too large"
        residual = np_rng.normal(size=EMBED_DIM - len(qid_dim))
        residual /= np.linalg.norm(residual)
        vectors[pos, len(qid_dim):] = residual * np.sqrt(1.0 - used)

    title_words = filler(6)
    doc = TrialDocument(
        doc_id=doc_id,
        title=sentence(title_words)[:-1],
        authors=tuple(f"{w.capitalize()} {v.capitalize()}" for w, v in zip(filler(3), filler(3))),
        abstract=paragraphs[0].text,
        paragraphs=tuple(paragraphs),
    )
    return doc, vectors


def _sample_evidence(rng: random.Random, n: int, include: int | None, exclude: set[int]) -> list[int]:
    pool = [i for i in range(n) if i not in exclude and i != include]
    picks = rng.sample(pool, 2 if include is not None else 3)
    return ([include] + picks) if include is not None else picks


# ---------------------------------------------------------------------------
# Stage 6: materialize sessions


def _rationale(rng: random.Random, lexicon: list[str]) -> str:
    words = " ".join(rng.choice(lexicon) for _ in range(rng.randint(4, 9)))
    return words[0].upper() + words[1:] + "."


def _timestamp(i: int) -> str:
    return f"2024-{2 + i % 3:02d}-{1 + i % 27:02d}T{8 + i % 9:02d}:00:00Z"


def _materialize(
    draft: _SessionDraft,
    questionnaire: Questionnaire,
    lexicon: list[str],
    rng: random.Random,
    seq: int,
) -> AssessmentSession:
    ts = _timestamp(seq)
    records: dict[str, QuestionRecord] = {}
    manual = draft.provenance == "manual"
    for q in questionnaire:
        qid = q.qid
        if draft.partial and q.domain in (3, 4):
            continue
        if qid in draft.dropped:
            continue
        answer = draft.answers[qid]
        timestamps = {"created": ts, "updated": ts}
        if answer is Answer.NOT_APPLICABLE:
            records[qid] = QuestionRecord(
                qid=qid,
                final_answer=answer,
                answer_source="expert" if manual else "model",
                rationale_source="expert" if manual else "model",
                timestamps=timestamps,
            )
            continue
        final_rationale = _rationale(rng, lexicon)
        if manual:
            records[qid] = QuestionRecord(
                qid=qid,
                final_answer=answer,
                model_answer=None,
                model_rationale="",
                final_rationale=final_rationale,
                answer_source="expert",
                rationale_source="expert",
                added_paragraphs=[draft.gold[qid]] if qid in draft.gold else [],
                timestamps=timestamps,
            )
            continue

        expert_ans = qid in draft.expert_answer
        expert_rat = qid in draft.expert_rationale
        if expert_ans:
            others = [a for a in LABEL_OF_ANSWER if a != answer]
            model_ans = rng.choice(others)
        else:
            model_ans = answer
        model_rationale = _rationale(rng, lexicon) if expert_rat else final_rationale
        evidence_idx = draft.evidence[qid]
        scores = [round(0.95 - 0.07 * i - rng.random() * 0.02, 6) for i in range(len(evidence_idx))]
        model_answer = ModelAnswer(
            qid=qid,
            answer=model_ans,
            rationale=model_rationale,
            raw_response=f"Answer: {LABEL_OF_ANSWER[model_ans]}. {model_rationale}",
            model_id=ASSISTED_MODEL_ID,
            context_mode=ASSISTED_MODE,
            evidence=tuple(zip(evidence_idx, scores)),
        )
        votes: list[tuple[int, str]] = []
        if qid in draft.up_marked:
            votes.append((draft.gold[qid], "up"))
        if qid in draft.down_marked:
            votes.append((evidence_idx[1], "down"))
        added: list[int] = []
        if qid in draft.added_marked:
            if qid in draft.up_marked:
                added.append(draft.added_extra[qid])
            else:
                added.append(draft.gold[qid])
        records[qid] = QuestionRecord(
            qid=qid,
            final_answer=answer,
            model_answer=model_answer,
            model_rationale=model_rationale,
            final_rationale=final_rationale,
            answer_source="expert" if expert_ans else "model",
            rationale_source="expert" if expert_rat else "model",
            votes=votes,
            added_paragraphs=added,
            timestamps=timestamps,
        )

    return AssessmentSession(
        session_id=draft.session_id,
        doc_id=draft.doc_id,
        annotator_id=draft.annotator_id,
        provenance=draft.provenance,
        model_id=None if manual else ASSISTED_MODEL_ID,
        context_mode=None if manual else ASSISTED_MODE,
        records=records,
        domain_judgments=dict(draft.domain_levels),
        overall=draft.overall,
        status=STATUS_IN_PROGRESS if draft.partial else STATUS_COMPLETE,
    )


# ---------------------------------------------------------------------------
# Top-level generation


def generate_release(out_dir: str | Path, seed: int = DEFAULT_SEED) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    np_rng = np.random.default_rng(seed)

    questionnaire = load_questionnaire()
    pools = _Pools(questionnaire)
    qid_dim = {qid: i for i, qid in enumerate(questionnaire.qids)}

    manual_ids = [_doc_id(i) for i in range(1, N_MANUAL + 1)]
    assisted_ids = [_doc_id(i) for i in range(N_MANUAL + 1, N_PAPERS + 1)]
    iaa_ids = assisted_ids[:N_IAA]
    other_assisted_ids = assisted_ids[N_IAA:]

    # 1. reliability subset with tuned agreement
    iaa_primary, iaa_second, kappa_value = _build_iaa_sessions(
        questionnaire, pools, rng, iaa_ids
    )

    # 2. judgment levels for all remaining papers; retry over sub-seeds until
    # the realized per-subset level mixes leave every NA target reachable
    iaa_na = {
        d: sum(
            1
            for draft in iaa_primary
            for qid, a in draft.answers.items()
            if int(qid.split(".")[0]) == d and a is Answer.NOT_APPLICABLE
        )
        for d in range(1, 6)
    }
    types = levels = partial_row = None
    for attempt in range(500):
        deal_rng = random.Random(seed * 100003 + attempt)
        candidate = _deal_levels(deal_rng, iaa_primary)
        if _deal_is_feasible(candidate, pools, questionnaire, iaa_na):
            types, levels, partial_row = candidate
            break
    assert types is not None, "no feasible level dealing found"
    n_rows = N_PAPERS - N_IAA
    drafts: list[_SessionDraft] = []
    manual_raters = [f"rater-{i}" for i in range(1, 6)]
    for row in range(n_rows):
        if row < N_MANUAL:
            doc_id = manual_ids[row]
            provenance = "manual"
            annotator = manual_raters[row % 5]
        else:
            doc_id = other_assisted_ids[row - N_MANUAL]
            provenance = "assisted"
            annotator = "rater-1" if row % 2 else "rater-2"
        draft = _SessionDraft(
            doc_id, f"s-{doc_id}", annotator, provenance, partial=(row == partial_row)
        )
        draft.domain_levels = {
            d: levels[(row, d)] for d in range(1, 6) if (row, d) in levels
        }
        draft.overall = {
            "low": RiskLevel.LOW,
            "sc": RiskLevel.SOME_CONCERNS,
            "high": RiskLevel.HIGH,
        }[types[row]]
        drafts.append(draft)
    assert drafts[partial_row].partial and drafts[partial_row].provenance == "assisted"

    manual_drafts = drafts[:N_MANUAL]
    assisted_drafts = drafts[N_MANUAL:]
    partial_draft = drafts[partial_row]
    tunable_assisted = [d for d in assisted_drafts if not d.partial]

    # 3. answer patterns with NA tuning, then drops for the remainder
    for domain in range(1, 6):
        n_q = len(questionnaire.domain_questions(domain))
        needed_manual = N_MANUAL * n_q - MANUAL_ANSWERED[domain]
        shortfall = _assign_patterns(manual_drafts, domain, needed_manual, pools, rng)
        _drop_records(manual_drafts, domain, shortfall, rng)

        iaa_na = sum(
            1
            for draft in iaa_primary
            for qid, a in draft.answers.items()
            if int(qid.split(".")[0]) == domain and a is Answer.NOT_APPLICABLE
        )
        capacity = (len(tunable_assisted) + len(iaa_primary)) * n_q
        needed_assisted = capacity - ASSISTED_ANSWERED[domain] - iaa_na
        shortfall = _assign_patterns(tunable_assisted, domain, needed_assisted, pools, rng)
        _drop_records(tunable_assisted, domain, shortfall, rng)
    # the unfinished session answers its three present domains
    for domain in (1, 2, 5):
        partial_draft.answers.update(
            pools.pick_any(domain, partial_draft.domain_levels[domain], rng)
        )

    # 4. usage marks over completed assisted sessions, gold marks over manual
    complete_assisted = iaa_primary + tunable_assisted
    _apply_usage_marks(complete_assisted, rng)
    _mark_manual_gold(manual_drafts, rng)

    # 5. gold instances and their designated ranks
    gold_keys: list[tuple[_SessionDraft, str]] = []
    for draft in manual_drafts + complete_assisted:
        for qid in sorted(set(draft.up_marked) | set(draft.added_marked)):
            gold_keys.append((draft, qid))
    total_gold = sum(EMBED_RANK_COUNTS.values())
    assert len(gold_keys) == total_gold, (len(gold_keys), total_gold)

    emb_ranks = [r for r, c in sorted(EMBED_RANK_COUNTS.items()) for _ in range(c)]
    bm_ranks = [r for r, c in sorted(BM25_RANK_COUNTS.items()) for _ in range(c)]
    rng.shuffle(emb_ranks)
    rng.shuffle(bm_ranks)
    plan_of: dict[tuple[str, str], _GoldPlan] = {}
    by_doc: dict[str, list[_GoldPlan]] = defaultdict(list)
    for (draft, qid), emb_rank, bm_rank in zip(gold_keys, emb_ranks, bm_ranks):
        plan = _GoldPlan(qid=qid, emb_rank=emb_rank, bm25_rank=bm_rank, signal_terms=[])
        plan_of[(draft.doc_id, qid)] = plan
        by_doc[draft.doc_id].append(plan)

    lexicon = _make_lexicon(rng, questionnaire)
    documents: dict[str, TrialDocument] = {}
    para_vectors: dict[str, np.ndarray] = {}
    all_doc_ids = manual_ids + assisted_ids
    for doc_id in all_doc_ids:
        plans = by_doc.get(doc_id, [])
        instance_qids = [p.qid for p in plans]
        for plan in plans:
            plan.signal_terms = _signal_terms_for(plan.qid, instance_qids, questionnaire)
        doc, vectors = _build_document(doc_id, plans, lexicon, rng, np_rng, qid_dim)
        documents[doc_id] = doc
        para_vectors[doc_id] = vectors

    # 6. evidence backfill now that paragraph counts are known
    for draft in manual_drafts + complete_assisted + [partial_draft] + iaa_second:
        n = len(documents[draft.doc_id].paragraphs)
        for qid, ans in sorted(draft.answers.items()):
            if ans is Answer.NOT_APPLICABLE or qid in draft.dropped:
                continue
            if draft.partial and int(qid.split(".")[0]) in (3, 4):
                continue
            plan = plan_of.get((draft.doc_id, qid)) if not draft.is_iaa_duplicate else None
            if draft.provenance == "manual":
                if plan is not None:
                    draft.gold[qid] = plan.gold_index
                continue
            if plan is None:
                draft.evidence[qid] = _sample_evidence(rng, n, None, {0})
                continue
            draft.gold[qid] = plan.gold_index
            if qid in draft.up_marked:
                draft.evidence[qid] = _sample_evidence(rng, n, plan.gold_index, {0})
                if qid in draft.added_marked:
                    extra = [
                        i for i in range(1, n) if i not in draft.evidence[qid]
                    ]
                    draft.added_extra[qid] = rng.choice(extra)
            else:  # gold via added paragraph: evidence must avoid it
                draft.evidence[qid] = _sample_evidence(
                    rng, n, None, {0, plan.gold_index}
                )

    # 7. materialize and write
    sessions: list[AssessmentSession] = []
    for seq, draft in enumerate(manual_drafts + complete_assisted + [partial_draft] + iaa_second):
        sessions.append(_materialize(draft, questionnaire, lexicon, rng, seq))
    sessions.sort(key=lambda s: s.session_id)

    with (out / "documents.jsonl").open("w", encoding="utf-8") as fh:
        for doc_id in all_doc_ids:
            fh.write(canonical_dumps(document_to_dict(documents[doc_id])) + "\n")
    with (out / "sessions.jsonl").open("w", encoding="utf-8") as fh:
        for session in sessions:
            fh.write(canonical_dumps(session_to_dict(session)) + "\n")

    queries = {
        qid: np.eye(EMBED_DIM, dtype=np.float64)[dim] for qid, dim in qid_dim.items()
    }
    SidecarVectors.save(out / "vectors.npz", EMBED_MODEL_ID, para_vectors, queries)

    manifest = {
        "name": "rob2kit-reference-release",
        "schema_version": 1,
        "seed": seed,
        "documents": len(documents),
        "sessions": len(sessions),
        "manual_papers": N_MANUAL,
        "assisted_papers": N_ASSISTED,
        "dual_annotated_papers": N_IAA,
        "gold_evidence_questions": total_gold,
        "embedding_model": EMBED_MODEL_ID,
        "engineered_kappa": round(kappa_value, 6),
    }
    (out / "manifest.json").write_text(canonical_dumps(manifest, pretty=True), "utf-8")
    return manifest
