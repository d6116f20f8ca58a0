"""Data-driven flowchart engine for domain-level and overall risk judgments.

Rule tables live in JSON files (one decision tree per domain) so the logic
can be audited and corrected without touching code. The walk is strict: a
missing answer raises SequencingError and an uncovered combination raises
TotalityError rather than guessing.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Union

from .errors import RuleTableError, SequencingError, TotalityError
from .questionnaire import Answer, Questionnaire, enumerate_gate_consistent


class RiskLevel(str, Enum):
    LOW = "low"
    SOME_CONCERNS = "some_concerns"
    HIGH = "high"

    @property
    def severity(self) -> int:
        return _SEVERITY[self]

    def __lt__(self, other: "RiskLevel") -> bool:  # type: ignore[override]
        return self.severity < other.severity


_SEVERITY = {RiskLevel.LOW: 0, RiskLevel.SOME_CONCERNS: 1, RiskLevel.HIGH: 2}


@dataclass(frozen=True)
class RuleBranch:
    classes: frozenset[Answer]
    next: Union["RuleNode", RiskLevel]


@dataclass(frozen=True)
class RuleNode:
    qid: str
    branches: tuple[RuleBranch, ...]


@dataclass(frozen=True)
class RuleTable:
    domain: int
    root: RuleNode
    provenance: str = ""


@dataclass(frozen=True)
class OverallRule:
    """Dominance policy with an optional discretionary escalation.

    When ``escalate_some_concerns_at`` is set, that many (or more)
    some-concerns domains escalate the overall judgment to high risk.
    """

    escalate_some_concerns_at: int | None = None


def _parse_tree(raw: Mapping[str, Any], path_hint: str) -> Union[RuleNode, RiskLevel]:
    if "risk" in raw:
        try:
            return RiskLevel(raw["risk"])
        except ValueError as exc:
            raise RuleTableError(f"{path_hint}: unknown risk level {raw['risk']!r}") from exc
    if "qid" not in raw or "branches" not in raw:
        raise RuleTableError(f"{path_hint}: node must have 'qid' and 'branches'")
    branches = []
    for i, br in enumerate(raw["branches"]):
        try:
            classes = frozenset(Answer(c) for c in br["classes"])
        except (ValueError, KeyError) as exc:
            raise RuleTableError(f"{path_hint}: bad branch classes at {raw['qid']}") from exc
        branches.append(
            RuleBranch(classes=classes, next=_parse_tree(br["next"], f"{path_hint}/{raw['qid']}[{i}]"))
        )
    return RuleNode(qid=raw["qid"], branches=tuple(branches))


def load_rule_table(path: str | Path) -> RuleTable:
    raw = json.loads(Path(path).read_text("utf-8"))
    return _table_from_raw(raw, str(path))


def _table_from_raw(raw: Mapping[str, Any], hint: str) -> RuleTable:
    tree = _parse_tree(raw["tree"], hint)
    if isinstance(tree, RiskLevel):
        raise RuleTableError(f"{hint}: root must be a decision node")
    return RuleTable(domain=int(raw["domain"]), root=tree, provenance=raw.get("provenance", ""))


@functools.lru_cache(maxsize=1)
def load_default_tables() -> dict[int, RuleTable]:
    """The five bundled domain tables, keyed by domain number."""
    tables = {}
    for domain in range(1, 6):
        text = (
            resources.files("rob2kit").joinpath(f"data/rules/domain{domain}.json").read_text("utf-8")
        )
        tables[domain] = _table_from_raw(json.loads(text), f"domain{domain}.json")
    return tables


def domain_judgment(table: RuleTable, answers: Mapping[str, Answer]) -> RiskLevel:
    """Walk the domain's decision tree over the given answers."""
    node: Union[RuleNode, RiskLevel] = table.root
    while isinstance(node, RuleNode):
        if node.qid not in answers:
            raise SequencingError(f"domain {table.domain}: missing answer for {node.qid}")
        answer = answers[node.qid]
        for branch in node.branches:
            if answer in branch.classes:
                node = branch.next
                break
        else:
            raise TotalityError(
                f"domain {table.domain}: no branch for {node.qid}={answer.value} "
                f"(answers: {sorted((q, a.value) for q, a in answers.items())})"
            )
    return node


def overall_judgment(
    domains: Mapping[int, RiskLevel], rule: OverallRule = OverallRule()
) -> RiskLevel:
    """Overall risk from the five domain judgments (dominance policy)."""
    missing = [d for d in range(1, 6) if d not in domains]
    if missing:
        raise SequencingError(f"missing domain judgments: {missing}")
    levels = [domains[d] for d in range(1, 6)]
    if any(lv is RiskLevel.HIGH for lv in levels):
        return RiskLevel.HIGH
    concerns = sum(1 for lv in levels if lv is RiskLevel.SOME_CONCERNS)
    if rule.escalate_some_concerns_at is not None and concerns >= rule.escalate_some_concerns_at:
        return RiskLevel.HIGH
    if concerns:
        return RiskLevel.SOME_CONCERNS
    return RiskLevel.LOW


def _walk_nodes(node: Union[RuleNode, RiskLevel]):
    if isinstance(node, RuleNode):
        yield node
        for br in node.branches:
            yield from _walk_nodes(br.next)


def validate_rule_table(table: RuleTable, questionnaire: Questionnaire) -> list[str]:
    """Gap/overlap/structure findings for a rule table (empty list when clean).

    Static checks: same-domain qids, disjoint branch classes, explicit
    NotApplicable routing on nodes that test gateable questions. Dynamic
    check: every gate-consistent answer assignment reaches exactly one leaf.
    """
    findings: list[str] = []
    domain_qids = {q.qid for q in questionnaire.domain_questions(table.domain)}
    gateable = {
        q.qid for q in questionnaire.domain_questions(table.domain) if q.gate is not None
    }
    for node in _walk_nodes(table.root):
        if node.qid not in domain_qids:
            findings.append(
                f"cross-domain violation: node tests {node.qid} outside domain {table.domain}"
            )
            continue
        seen: set[Answer] = set()
        for br in node.branches:
            overlap = seen & br.classes
            if overlap:
                findings.append(
                    f"overlap at {node.qid}: {sorted(a.value for a in overlap)} matched twice"
                )
            seen |= br.classes
        if node.qid in gateable and Answer.NOT_APPLICABLE not in seen:
            findings.append(f"node {node.qid} does not route not_applicable explicitly")

    if any("cross-domain" in f for f in findings):
        return findings

    for assignment in enumerate_gate_consistent(questionnaire, table.domain):
        try:
            domain_judgment(table, assignment)
        except TotalityError:
            combo = ",".join(f"{q}={assignment[q].value}" for q in sorted(assignment))
            findings.append(f"gap: no leaf for {combo}")
        except SequencingError as exc:
            findings.append(f"walk requires an unanswered qid: {exc}")
    return findings
