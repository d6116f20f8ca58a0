"""Benchmark runs and report computations over a loaded release.

Gold labels come from the manually annotated subset only. Oracle-context
runs are restricted to questions with annotator-identified evidence. Raw
responses are cached as JSON lines so re-scoring never re-queries a model.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .dataset import Release, gold_evidence_index, gold_instances
from .embedders import HashEmbedder
from .errors import DatasetError
from .llm import GenerationConfig, LLMClient
from .metrics import (
    BenchmarkItem,
    BenchmarkRun,
    Class3,
    class3_of,
    class4_of,
    cohens_kappa,
    f1_scores,
    severity_breakdown,
)
from .pipeline import _parse_with_retry
from .prompts import ContextMode, FewshotExample, build_fewshot_prompt, build_prompt, full_paper_passages
from .questionnaire import Answer, Questionnaire
from .retrieval import build_index, index_from_vectors, query_bm25, query_vector, query_with_vector, recall_at_k
from .rules import RiskLevel, domain_judgment, load_default_tables
from .store import AssessmentSession, usage_stats
from .utils import sha256_hex

# ---------------------------------------------------------------------------
# Retrieval evaluation


def retrieval_eval(
    release: Release, ks: Sequence[int], methods: Sequence[str] = ("embedding", "bm25")
) -> dict:
    """Recall@k per retrieval method over every gold-evidence question."""
    instances = gold_instances(release)
    if not instances:
        raise DatasetError("release has no gold-evidence questions")
    gold = {(doc_id, qid): g for doc_id, qid, g in instances}
    max_k = max(ks)
    rows = []

    if "embedding" in methods:
        if release.vectors is None:
            raise DatasetError(
                "embedding retrieval evaluation needs the sidecar vectors.npz"
            )
        rankings = {}
        for doc_id, qid, _ in instances:
            idx = index_from_vectors(doc_id, release.vectors.doc_matrix(doc_id), release.vectors.model_id)
            res = query_with_vector(idx, release.vectors.query_vec(qid), max_k)
            rankings[(doc_id, qid)] = [r.paragraph_index for r in res]
        for k in ks:
            rows.append(
                {"method": "embedding", "k": k, "recall": recall_at_k(rankings, gold, k)}
            )

    if "bm25" in methods:
        from .questionnaire import load_questionnaire

        questionnaire = load_questionnaire()
        questionnaire_text = {q.qid: q.text for q in questionnaire}
        embedder = HashEmbedder()
        index_cache: dict[str, object] = {}
        rankings = {}
        for doc_id, qid, _ in instances:
            if doc_id not in index_cache:
                index_cache[doc_id] = build_index(release.documents[doc_id], embedder)
            res = query_bm25(index_cache[doc_id], questionnaire_text[qid], max_k)
            rankings[(doc_id, qid)] = [r.paragraph_index for r in res]
        for k in ks:
            rows.append({"method": "bm25", "k": k, "recall": recall_at_k(rankings, gold, k)})

    return {"n_questions": len(instances), "rows": rows}


# ---------------------------------------------------------------------------
# QA benchmark


@dataclass
class BenchmarkConfig:
    mode: ContextMode
    generation: GenerationConfig
    fewshot: bool = False
    seed: int = 0
    jobs: int = 1
    cache_path: Path | None = None


def _gold_items(release: Release) -> list[tuple[AssessmentSession, str, Class3, int | None]]:
    items = []
    for session in release.subset("manual"):
        for qid in sorted(session.records):
            rec = session.records[qid]
            cls = class3_of(rec.final_answer)
            if cls is None:
                continue
            items.append((session, qid, cls, gold_evidence_index(rec)))
    return items


def _sample_fewshot(
    release: Release,
    questionnaire: Questionnaire,
    rng: random.Random,
) -> list[FewshotExample]:
    """One gold-labeled example per 3-class, drawn from oracle-evidence items."""
    by_class: dict[Class3, list[tuple[str, str, int, Class3]]] = {c: [] for c in Class3}
    for session, qid, cls, evidence in _gold_items(release):
        if evidence is not None:
            by_class[cls].append((session.doc_id, qid, evidence, cls))
    examples = []
    class_to_answer = {
        Class3.YPY: Answer.YES,
        Class3.NPN: Answer.NO,
        Class3.NI: Answer.NO_INFORMATION,
    }
    for cls in Class3:
        if not by_class[cls]:
            continue
        doc_id, qid, evidence, _ = rng.choice(sorted(by_class[cls]))
        passage = release.documents[doc_id].paragraphs[evidence].text
        examples.append(
            FewshotExample(
                doc_id=doc_id,
                qid=qid,
                question_text=questionnaire.by_qid(qid).text,
                passage=passage,
                label=class_to_answer[cls],
            )
        )
    return examples


def run_benchmark(
    release: Release,
    questionnaire: Questionnaire,
    llm: LLMClient,
    config: BenchmarkConfig,
) -> BenchmarkRun:
    """Score a model over the manual subset's gold labels in one context mode."""
    mode = config.mode
    gold_items = _gold_items(release)
    if mode.kind == "oracle":
        gold_items = [it for it in gold_items if it[3] is not None]
    if not gold_items:
        raise DatasetError("no scorable questions for this mode")

    fewshot_examples: list[FewshotExample] = []
    if config.fewshot:
        rng = random.Random(config.seed)
        fewshot_examples = _sample_fewshot(release, questionnaire, rng)
        sampled = {(ex.doc_id, ex.qid) for ex in fewshot_examples}
        gold_items = [it for it in gold_items if (it[0].doc_id, it[1]) not in sampled]
    # the exclusion list handed to the prompt builder is the evaluation set
    # itself: any example drawn from it is contamination
    eval_keys = {(it[0].doc_id, it[1]) for it in gold_items}

    by_doc: dict[str, list[tuple[AssessmentSession, str, Class3, int | None]]] = {}
    for item in gold_items:
        by_doc.setdefault(item[0].doc_id, []).append(item)

    embedder = HashEmbedder()
    index_cache: dict[str, object] = {}

    def passages_for(doc_id: str, qid: str, evidence: int | None) -> list[str]:
        doc = release.documents[doc_id]
        if mode.kind == "full":
            return full_paper_passages(doc)
        if mode.kind == "oracle":
            return [doc.paragraphs[evidence].text]
        if release.vectors is not None and release.vectors.has_doc(doc_id):
            idx = index_from_vectors(doc_id, release.vectors.doc_matrix(doc_id), release.vectors.model_id)
            res = query_with_vector(idx, release.vectors.query_vec(qid), mode.k or 1)
        else:
            if doc_id not in index_cache:
                index_cache[doc_id] = build_index(doc, embedder)
            res = query_vector(index_cache[doc_id], questionnaire.by_qid(qid).text, mode.k or 1, embedder)
        return [doc.paragraphs[r.paragraph_index].text for r in res]

    def score_doc(doc_id: str) -> tuple[list[BenchmarkItem], list[dict], int]:
        items: list[BenchmarkItem] = []
        cache_rows: list[dict] = []
        errors = 0
        for session, qid, gold_cls, evidence in by_doc[doc_id]:
            question = questionnaire.by_qid(qid)
            passages = passages_for(doc_id, qid, evidence)
            if fewshot_examples:
                prompt = build_fewshot_prompt(question, mode, passages, fewshot_examples, eval_keys)
            else:
                prompt = build_prompt(question, mode, passages)
            tags = {"doc_id": doc_id, "qid": qid}
            try:
                raw = llm.complete(prompt, config.generation, tags=tags)
                answer, _, final_raw = _parse_with_retry(raw, llm, prompt, config.generation, tags)
            except Exception as exc:  # per-question failure; coverage reported
                errors += 1
                cache_rows.append(
                    {"doc_id": doc_id, "qid": qid, "gold": gold_cls.value, "pred": None,
                     "error": str(exc), "raw_response_digest": None}
                )
                continue
            pred = class3_of(answer)
            items.append(
                BenchmarkItem(
                    doc_id=doc_id,
                    qid=qid,
                    domain=int(qid.split(".")[0]),
                    gold=gold_cls,
                    pred=pred,
                )
            )
            cache_rows.append(
                {"doc_id": doc_id, "qid": qid, "gold": gold_cls.value, "pred": pred.value,
                 "raw_response_digest": sha256_hex(final_raw)}
            )
        return items, cache_rows, errors

    doc_ids = sorted(by_doc)
    results: dict[str, tuple[list[BenchmarkItem], list[dict], int]] = {}
    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            for doc_id, res in zip(doc_ids, pool.map(score_doc, doc_ids)):
                results[doc_id] = res
    else:
        for doc_id in doc_ids:
            results[doc_id] = score_doc(doc_id)

    all_items: list[BenchmarkItem] = []
    all_cache: list[dict] = []
    total_errors = 0
    for doc_id in doc_ids:
        items, cache_rows, errors = results[doc_id]
        all_items.extend(items)
        all_cache.extend(cache_rows)
        total_errors += errors

    run = BenchmarkRun(
        model_id=config.generation.model,
        context_mode=str(mode),
        items=all_items,
        metadata={
            "n_questions": len(gold_items),
            "n_scored": len(all_items),
            "n_errors": total_errors,
            "coverage": len(all_items) / len(gold_items) if gold_items else 0.0,
            "fewshot": config.fewshot,
            "fewshot_examples": sorted((ex.doc_id, ex.qid) for ex in fewshot_examples),
            "seed": config.seed,
        },
    )
    if config.cache_path is not None:
        save_run_cache(run, all_cache, config.cache_path)
    return run


def save_run_cache(run: BenchmarkRun, cache_rows: list[dict], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"header": {"model_id": run.model_id, "context_mode": run.context_mode,
                                        **run.metadata}}, sort_keys=True) + "\n")
        for row in cache_rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def load_run_cache(path: str | Path) -> BenchmarkRun:
    """Rebuild a scorable run from a cache file without touching any model."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"no run cache at {path}")
    header: dict = {}
    items: list[BenchmarkItem] = []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            row = json.loads(line)
            if "header" in row:
                header = row["header"]
                continue
            if row.get("pred") is None:
                continue
            items.append(
                BenchmarkItem(
                    doc_id=row["doc_id"],
                    qid=row["qid"],
                    domain=int(row["qid"].split(".")[0]),
                    gold=Class3(row["gold"]),
                    pred=Class3(row["pred"]),
                )
            )
    return BenchmarkRun(
        model_id=header.get("model_id", "unknown"),
        context_mode=header.get("context_mode", "unknown"),
        items=items,
        metadata=header,
    )


# ---------------------------------------------------------------------------
# Reports


def table_report(run: BenchmarkRun, macro_axis: str = "class") -> dict:
    """Per-domain micro-F1 with micro/macro averages, plus question counts."""
    report = f1_scores(run)
    macro = report.macro if macro_axis == "class" else report.macro_by_question
    return {
        "model_id": run.model_id,
        "context_mode": run.context_mode,
        "n_per_domain": report.n_per_domain,
        "n_total": report.n_total,
        "per_domain_micro_f1": {d: round(v, 4) for d, v in report.per_domain.items()},
        "micro_f1": round(report.micro, 4),
        "macro_f1": round(macro, 4),
        "macro_axis": macro_axis,
        "coverage": run.metadata.get("coverage"),
    }


def severity_report(run: BenchmarkRun) -> dict:
    counts = severity_breakdown(run)
    return {
        "model_id": run.model_id,
        "context_mode": run.context_mode,
        "classes": {
            cls: {
                "tp": c.tp,
                "fp_class1": c.fp_class1,
                "fp_class2": c.fp_class2,
                "fn_class1": c.fn_class1,
                "fn_class2": c.fn_class2,
            }
            for cls, c in counts.items()
        },
    }


def usage_report(release: Release) -> dict:
    """Question-level feedback and source counts over completed assisted sessions."""
    sessions = [
        s for s in release.subset("assisted") if s.status == "complete"
    ]
    stats = usage_stats(sessions)

    def row(r) -> dict:
        answered = r.answered or 1
        votes = r.upvote_questions + r.downvote_questions
        return {
            "answered": r.answered,
            "model_answers": r.model_answers,
            "model_answers_pct": round(100 * r.model_answers / answered, 1),
            "expert_answers": r.expert_answers,
            "expert_answers_pct": round(100 * r.expert_answers / answered, 1),
            "model_rationales": r.model_rationales,
            "model_rationales_pct": round(100 * r.model_rationales / answered, 1),
            "expert_rationales": r.expert_rationales,
            "expert_rationales_pct": round(100 * r.expert_rationales / answered, 1),
            "upvote_questions": r.upvote_questions,
            "downvote_questions": r.downvote_questions,
            "added_paragraph_questions": r.added_questions,
            "upvotes_total": r.upvotes_total,
            "downvotes_total": r.downvotes_total,
            "positive_feedback_pct": round(100 * r.upvote_questions / votes, 1) if votes else None,
        }

    return {
        "n_sessions": len(sessions),
        "per_domain": {d: row(stats.per_domain[d]) for d in range(1, 6)},
        "total": row(stats.total),
    }


def distribution_report(release: Release) -> dict:
    """Stored judgment counts per domain and overall, over primary sessions."""
    primary = release.primary_sessions()
    out: dict = {"n_papers": len(primary), "domains": {}, "overall": {}}
    for d in range(1, 6):
        counter = Counter(
            s.domain_judgments[d].value for s in primary if d in s.domain_judgments
        )
        out["domains"][d] = {
            "low": counter.get("low", 0),
            "some_concerns": counter.get("some_concerns", 0),
            "high": counter.get("high", 0),
        }
    overall = Counter(s.overall.value for s in primary if s.overall is not None)
    out["overall"] = {
        "low": overall.get("low", 0),
        "some_concerns": overall.get("some_concerns", 0),
        "high": overall.get("high", 0),
    }
    return out


def kappa_report(release: Release, questionnaire: Questionnaire) -> dict:
    """Four-class agreement over the dual-annotated subset."""
    pairs = release.dual_annotated_pairs()
    if not pairs:
        raise DatasetError("release contains no dual-annotated papers")
    va, vb = [], []
    n_questions = 0
    for first, second in pairs:
        for qid in questionnaire.qids:
            ra = first.records.get(qid)
            rb = second.records.get(qid)
            if ra is None or rb is None:
                continue
            va.append(class4_of(ra.final_answer))
            vb.append(class4_of(rb.final_answer))
            n_questions += 1
    return {
        "n_papers": len(pairs),
        "n_questions": n_questions,
        "kappa_4class": round(cohens_kappa(va, vb), 4),
    }


def consistency_report(release: Release, questionnaire: Questionnaire) -> dict:
    """Compare stored domain judgments against re-derived flowchart judgments.

    Diagnostic only: sessions with missing records or missing stored
    judgments are categorized, not failed.
    """
    tables = load_default_tables()
    matches = 0
    mismatches: list[dict] = []
    underivable = 0
    missing_stored = 0
    for session in release.primary_sessions():
        answers = session.final_answers()
        for d in range(1, 6):
            qids = [q.qid for q in questionnaire.domain_questions(d)]
            stored: RiskLevel | None = session.domain_judgments.get(d)
            if any(qid not in answers for qid in qids):
                underivable += 1
                continue
            derived = domain_judgment(tables[d], answers)
            if stored is None:
                missing_stored += 1
                continue
            if derived is stored:
                matches += 1
            else:
                mismatches.append(
                    {
                        "session_id": session.session_id,
                        "domain": d,
                        "stored": stored.value,
                        "derived": derived.value,
                    }
                )
    return {
        "matches": matches,
        "mismatches": mismatches,
        "n_mismatches": len(mismatches),
        "underivable_domains": underivable,
        "missing_stored_judgments": missing_stored,
    }
