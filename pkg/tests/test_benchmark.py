from __future__ import annotations

import pytest

from rob2kit.benchmark import (
    BenchmarkConfig,
    consistency_report,
    distribution_report,
    kappa_report,
    load_run_cache,
    retrieval_eval,
    run_benchmark,
    severity_report,
    table_report,
    usage_report,
)
from rob2kit.errors import DatasetError
from rob2kit.llm import GenerationConfig, StubLLM
from rob2kit.metrics import Class3, class3_of, f1_scores
from rob2kit.prompts import ContextMode


def gold_echo_llm(release) -> StubLLM:
    label = {Class3.YPY: "yes", Class3.NPN: "no", Class3.NI: "no information"}
    script = {}
    for session in release.subset("manual"):
        for qid, rec in session.records.items():
            cls = class3_of(rec.final_answer)
            if cls is not None:
                script[(session.doc_id, qid)] = f"Answer: {label[cls]}. Echo."
    return StubLLM(script=script)


def test_retrieval_eval_matches_engineered_profile(release):
    result = retrieval_eval(release, [1, 3, 5, 10])
    assert result["n_questions"] == 1202
    got = {(r["method"], r["k"]): r["recall"] for r in result["rows"]}
    assert got[("embedding", 1)] == pytest.approx(0.268, abs=0.002)
    assert got[("embedding", 10)] == pytest.approx(0.678, abs=0.002)
    assert got[("bm25", 1)] == pytest.approx(0.140, abs=0.002)
    assert got[("bm25", 10)] == pytest.approx(0.533, abs=0.002)


def test_oracle_benchmark_with_gold_echo_is_perfect(release, questionnaire, tmp_path):
    config = BenchmarkConfig(
        mode=ContextMode.parse("oracle"),
        generation=GenerationConfig(model="stub:gold"),
        cache_path=tmp_path / "run.jsonl",
    )
    run = run_benchmark(release, questionnaire, gold_echo_llm(release), config)
    report = f1_scores(run)
    assert report.micro == 1.0 and report.macro == 1.0
    assert all(v == 1.0 for v in report.per_domain.values())
    # oracle-mode question counts follow the annotator-evidence subset
    assert report.n_per_domain == {1: 197, 2: 124, 3: 37, 4: 73, 5: 11}

    # re-scoring from the cache never re-queries a model
    cached = load_run_cache(tmp_path / "run.jsonl")
    assert f1_scores(cached).micro == 1.0
    assert len(cached.items) == len(run.items)
    assert table_report(cached)["per_domain_micro_f1"] == table_report(run)["per_domain_micro_f1"]


def test_topk_benchmark_counts_follow_answered_questions(release, questionnaire):
    config = BenchmarkConfig(
        mode=ContextMode.parse("topk:3"),
        generation=GenerationConfig(model="stub"),
        jobs=4,
    )
    run = run_benchmark(release, questionnaire, StubLLM(behavior="fixed", fixed_label="yes"), config)
    report = f1_scores(run)
    assert report.n_per_domain == {1: 735, 2: 1278, 3: 598, 4: 1027, 5: 735}
    assert run.metadata["coverage"] == 1.0


def test_fewshot_examples_are_excluded_from_scoring(release, questionnaire):
    config = BenchmarkConfig(
        mode=ContextMode.parse("topk:1"),
        generation=GenerationConfig(model="stub"),
        fewshot=True,
        seed=11,
    )
    run = run_benchmark(release, questionnaire, gold_echo_llm(release), config)
    examples = run.metadata["fewshot_examples"]
    assert len(examples) == 3
    scored_keys = {(it.doc_id, it.qid) for it in run.items}
    for key in examples:
        assert tuple(key) not in scored_keys


def test_usage_report_reproduces_feedback_totals(release):
    report = usage_report(release)
    assert report["n_sessions"] == 275
    total = report["total"]
    assert (total["model_answers"], total["expert_answers"]) == (2621, 1930)
    assert (total["model_rationales"], total["expert_rationales"]) == (3243, 1308)
    assert total["upvote_questions"] == 480
    assert total["downvote_questions"] == 135
    assert total["added_paragraph_questions"] == 356
    assert total["positive_feedback_pct"] == 78.0


def test_distribution_report_tabulates_stored_judgments(release):
    report = distribution_report(release)
    assert report["n_papers"] == 521
    assert report["domains"][1] == {"low": 234, "some_concerns": 243, "high": 44}
    assert report["overall"] == {"low": 64, "some_concerns": 301, "high": 156}


def test_kappa_report_on_dual_annotated_subset(release, questionnaire):
    report = kappa_report(release, questionnaire)
    assert report["n_papers"] == 20
    assert report["n_questions"] == 440
    assert abs(report["kappa_4class"] - 0.40) <= 0.01


def test_consistency_report_structure(release, questionnaire):
    report = consistency_report(release, questionnaire)
    # engineered sessions are flowchart-consistent; holes are categorized
    assert report["n_mismatches"] == 0
    assert report["matches"] > 2400
    assert report["underivable_domains"] > 0


def test_severity_report_shape(release, questionnaire, tmp_path):
    config = BenchmarkConfig(
        mode=ContextMode.parse("oracle"), generation=GenerationConfig(model="stub")
    )
    run = run_benchmark(release, questionnaire, StubLLM(behavior="cycle"), config)
    report = severity_report(run)
    for cls in ("y_py", "n_pn", "ni"):
        counts = report["classes"][cls]
        gold_count = sum(1 for it in run.items if it.gold.value == cls)
        assert counts["tp"] + counts["fn_class1"] + counts["fn_class2"] == gold_count


def test_retrieval_eval_requires_sidecar_for_embeddings(release):
    import dataclasses

    stripped = dataclasses.replace(release, vectors=None)
    with pytest.raises(DatasetError, match="sidecar"):
        retrieval_eval(stripped, [1], methods=("embedding",))
    result = retrieval_eval(stripped, [1], methods=("bm25",))
    assert result["rows"][0]["method"] == "bm25"
