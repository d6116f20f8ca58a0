"""Operator command line: ingestion, assessment, benchmarks, reports.

Flags override environment variables, which override the optional config
file ``<data>/rob2kit.json``. Machine-readable outputs go under ``--out``;
volatile fields (timestamps, tool version) stay in a separate ``meta``
block so the data sections are byte-stable for identical inputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import __version__
from .benchmark import (
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
from .dataset import load_release
from .documents import export_document_json, ingest_document, validate_document
from .embedders import HashEmbedder
from .errors import ConfigurationError, DatasetError, Rob2Error
from .llm import AuditLog, GenerationConfig, HttpLLMClient, StubLLM
from .pipeline import assess_document
from .prompts import ContextMode
from .questionnaire import load_questionnaire
from .retrieval import build_index
from .rules import load_default_tables
from .store import AssessmentSession, complete_session, export_session, records_from_items
from .utils import canonical_dumps, parse_clock_spec


def _load_config_file(data_dir: Path) -> dict:
    path = data_dir / "rob2kit.json"
    if path.exists():
        return json.loads(path.read_text("utf-8"))
    return {}


def _resolve(flag_value, env_name: str, file_config: dict, file_key: str, default=None):
    if flag_value is not None:
        return flag_value
    if os.environ.get(env_name):
        return os.environ[env_name]
    return file_config.get(file_key, default)


def _resolve_model(flag_value: str | None, data_dir: Path) -> str:
    file_config = _load_config_file(data_dir)
    return _resolve(flag_value, "LLM_MODEL", file_config, "llm_model", default="stub")


def _make_llm(model_spec: str, data_dir: Path, audit_path: Path | None, clock):
    if model_spec.startswith("stub"):
        return StubLLM.parse_spec(model_spec), GenerationConfig(model=model_spec)
    file_config = _load_config_file(data_dir)
    base_url = _resolve(None, "LLM_BASE_URL", file_config, "llm_base_url")
    if not base_url:
        raise ConfigurationError(
            "no LLM endpoint configured: set LLM_BASE_URL or llm_base_url in rob2kit.json"
        )
    audit = AuditLog(audit_path, clock=clock) if audit_path else None
    client = HttpLLMClient(base_url, api_key=os.environ.get("LLM_API_KEY", ""), audit=audit)
    return client, GenerationConfig(model=model_spec)


def _make_embedder(spec: str, data_dir: Path):
    if spec == "hash":
        return HashEmbedder()
    if spec.startswith("http:"):
        file_config = _load_config_file(data_dir)
        base_url = _resolve(None, "EMBED_BASE_URL", file_config, "embed_base_url")
        if not base_url:
            raise ConfigurationError(
                "no embedding endpoint configured: set EMBED_BASE_URL or embed_base_url in rob2kit.json"
            )
        from .embedders import HttpEmbedder

        return HttpEmbedder(base_url, spec.split(":", 1)[1])
    raise ConfigurationError(f"unknown embedder spec {spec!r} (use hash or http:<model>)")


def _write_json(path: Path, data: dict, clock) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"meta": {"generated_at": clock.now(), "tool_version": __version__}, "data": data}
    path.write_text(canonical_dumps(payload, pretty=True) + "\n", "utf-8")


def _print_kv(title: str, pairs) -> None:
    print(title)
    for key, value in pairs:
        print(f"  {key}: {value}")


# ---------------------------------------------------------------------------
# Commands


def cmd_ingest(args) -> int:
    data_dir = Path(args.data)
    out_dir = data_dir / "documents"
    out_dir.mkdir(parents=True, exist_ok=True)
    for file_path in args.files:
        doc = ingest_document(Path(file_path).read_text("utf-8"))
        violations = validate_document(doc)
        if violations:
            raise DatasetError(f"{file_path}: {'; '.join(violations)}")
        target = out_dir / f"{doc.doc_id.replace(':', '_')}.json"
        target.write_text(export_document_json(doc), "utf-8")
        print(f"{file_path} -> {doc.doc_id} ({len(doc.paragraphs)} paragraphs)")
    return 0


def _find_document(data_dir: Path, doc_id: str):
    direct = data_dir / "documents" / f"{doc_id.replace(':', '_')}.json"
    if direct.exists():
        from .documents import document_from_dict

        return document_from_dict(json.loads(direct.read_text("utf-8")))
    try:
        release = load_release(data_dir)
    except DatasetError:
        release = None
    if release and doc_id in release.documents:
        return release.documents[doc_id]
    raise DatasetError(
        f"document {doc_id!r} not found under {data_dir}/documents or in a release there; "
        "run `rob2kit ingest` first"
    )


def cmd_assess(args) -> int:
    clock = parse_clock_spec(args.clock)
    data_dir = Path(args.data)
    doc = _find_document(data_dir, args.doc)
    questionnaire = load_questionnaire()
    tables = load_default_tables()
    embedder = _make_embedder(args.embedder, data_dir)
    index = build_index(doc, embedder)
    mode = ContextMode.parse(args.mode)
    audit_path = data_dir / "runs" / "llm_audit.jsonl"
    model = _resolve_model(args.model, data_dir)
    llm, generation = _make_llm(model, data_dir, audit_path, clock)

    items = assess_document(
        doc, questionnaire, index, mode, llm, generation, embedder=embedder
    )
    failures = [it for it in items if it.error]
    session = AssessmentSession(
        session_id=f"assess-{doc.doc_id.replace(':', '-')}-{model.replace(':', '-')}",
        doc_id=doc.doc_id,
        annotator_id=args.annotator,
        provenance="assisted",
        model_id=model,
        context_mode=args.mode,
        records=records_from_items(items, clock=clock),
    )
    if not failures:
        complete_session(session, questionnaire, tables)
    out_path = Path(args.out) if args.out else data_dir / "sessions-cli" / f"{session.session_id}.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(export_session(session, pretty=True) + "\n", "utf-8")

    answered = sum(1 for it in items if it.answer is not None)
    _print_kv(
        f"assessment of {doc.doc_id} with {model} ({args.mode})",
        [
            ("questions answered", answered),
            ("errors", len(failures)),
            ("status", session.status),
            ("overall", session.overall.value if session.overall else "incomplete"),
            ("export", out_path),
        ],
    )
    return 0 if not failures else 1


def cmd_eval_retrieval(args) -> int:
    clock = parse_clock_spec(args.clock)
    release = load_release(args.data)
    ks = [int(k) for k in args.k.split(",")]
    methods = [m.strip() for m in args.method.split(",")]
    result = retrieval_eval(release, ks, methods)
    out_dir = Path(args.out)
    _write_json(out_dir / "retrieval_eval.json", result, clock)
    with (out_dir / "retrieval_eval.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["method", "k", "recall"])
        writer.writeheader()
        for row in result["rows"]:
            writer.writerow({**row, "recall": f"{row['recall']:.4f}"})
    print(f"retrieval evaluation over {result['n_questions']} gold-evidence questions")
    for row in result["rows"]:
        print(f"  {row['method']:>10} recall@{row['k']:<3} {row['recall']:.3f}")
    return 0


def cmd_eval_qa(args) -> int:
    clock = parse_clock_spec(args.clock)
    data_dir = Path(args.data)
    release = load_release(data_dir)
    questionnaire = load_questionnaire()
    mode = ContextMode.parse(args.mode)
    out_dir = Path(args.out)
    model = _resolve_model(args.model, data_dir)
    cache_path = out_dir / f"run_{model.replace(':', '-')}_{str(mode).replace(':', '-')}.jsonl"

    if model == "stub:gold":
        # scripted reference model that echoes the gold label; exercises the
        # full pipeline and must score 1.0 everywhere
        script = {}
        from .metrics import class3_of, Class3

        class_label = {Class3.YPY: "yes", Class3.NPN: "no", Class3.NI: "no information"}
        for session in release.subset("manual"):
            for qid, rec in session.records.items():
                cls = class3_of(rec.final_answer)
                if cls is not None:
                    script[(session.doc_id, qid)] = f"Answer: {class_label[cls]}. Gold echo."
        llm = StubLLM(script=script)
        generation = GenerationConfig(model="stub:gold")
    else:
        llm, generation = _make_llm(model, data_dir, out_dir / "llm_audit.jsonl", clock)

    config = BenchmarkConfig(
        mode=mode,
        generation=generation,
        fewshot=args.fewshot,
        seed=args.seed,
        jobs=args.jobs,
        cache_path=cache_path,
    )
    run = run_benchmark(release, questionnaire, llm, config)
    report = table_report(run, macro_axis=args.macro_axis)
    _write_json(out_dir / "qa_eval.json", report, clock)
    _print_kv(
        f"qa benchmark {run.model_id} ({run.context_mode})",
        [
            ("questions", report["n_total"]),
            ("micro F1", report["micro_f1"]),
            ("macro F1", report["macro_f1"]),
            ("coverage", report["coverage"]),
            ("run cache", cache_path),
        ],
    )
    return 0


def _report_table2(args, clock) -> dict:
    run = load_run_cache(args.run[0])
    report = table_report(run, macro_axis=args.macro_axis)
    rows = [["model", "mode", "D1", "D2", "D3", "D4", "D5", "micro", "macro"]]
    per_domain = report["per_domain_micro_f1"]
    rows.append(
        [report["model_id"], report["context_mode"]]
        + [f"{per_domain.get(d, float('nan')):.2f}" for d in range(1, 6)]
        + [f"{report['micro_f1']:.2f}", f"{report['macro_f1']:.2f}"]
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "table2.csv").open("w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(rows)
    return report


def cmd_report(args) -> int:
    clock = parse_clock_spec(args.clock)
    questionnaire = load_questionnaire()
    release = None
    if args.kind in ("usage", "distribution", "kappa", "consistency"):
        release = load_release(args.data)
    out_dir = Path(args.out)

    if args.kind == "usage":
        report = usage_report(release)
        _write_json(out_dir / "usage.json", report, clock)
        total = report["total"]
        _print_kv(
            f"usage over {report['n_sessions']} completed assisted assessments",
            [
                ("model answers kept", f"{total['model_answers']} ({total['model_answers_pct']}%)"),
                ("expert answers", f"{total['expert_answers']} ({total['expert_answers_pct']}%)"),
                ("model rationales kept", f"{total['model_rationales']} ({total['model_rationales_pct']}%)"),
                ("expert rationales", f"{total['expert_rationales']} ({total['expert_rationales_pct']}%)"),
                ("questions with upvote", total["upvote_questions"]),
                ("questions with downvote", total["downvote_questions"]),
                ("questions with added paragraphs", total["added_paragraph_questions"]),
                ("positive feedback share", f"{total['positive_feedback_pct']}%"),
            ],
        )
    elif args.kind == "distribution":
        report = distribution_report(release)
        _write_json(out_dir / "distribution.json", report, clock)
        print(f"judgment distribution over {report['n_papers']} papers")
        for d in range(1, 6):
            row = report["domains"][d]
            print(f"  domain {d}: low={row['low']} some_concerns={row['some_concerns']} high={row['high']}")
        row = report["overall"]
        print(f"  overall : low={row['low']} some_concerns={row['some_concerns']} high={row['high']}")
    elif args.kind == "kappa":
        report = kappa_report(release, questionnaire)
        _write_json(out_dir / "kappa.json", report, clock)
        _print_kv(
            "inter-rater agreement (dual-annotated subset)",
            [
                ("papers", report["n_papers"]),
                ("questions", report["n_questions"]),
                ("4-class Cohen's kappa", report["kappa_4class"]),
            ],
        )
    elif args.kind == "consistency":
        report = consistency_report(release, questionnaire)
        _write_json(out_dir / "consistency.json", report, clock)
        _print_kv(
            "stored vs re-derived domain judgments",
            [
                ("matches", report["matches"]),
                ("mismatches", report["n_mismatches"]),
                ("underivable (missing answers)", report["underivable_domains"]),
                ("missing stored judgments", report["missing_stored_judgments"]),
            ],
        )
    elif args.kind == "table2":
        if not args.run:
            raise ConfigurationError("report table2 requires --run <cache.jsonl>")
        report = _report_table2(args, clock)
        _write_json(out_dir / "table2.json", report, clock)
        _print_kv(
            f"benchmark table for {report['model_id']} ({report['context_mode']})",
            [("micro F1", report["micro_f1"]), ("macro F1", report["macro_f1"])],
        )
    elif args.kind == "severity":
        if not args.run:
            raise ConfigurationError("report severity requires --run <cache.jsonl>")
        reports = [severity_report(load_run_cache(path)) for path in args.run]
        if len(reports) == 1:
            report = reports[0]
        else:
            # normalized (uniform) average of counts across run configurations
            report = {
                "model_id": reports[0]["model_id"],
                "context_mode": "avg:" + ",".join(r["context_mode"] for r in reports),
                "averaged_over": len(reports),
                "classes": {
                    cls: {
                        key: round(
                            sum(r["classes"][cls][key] for r in reports) / len(reports), 1
                        )
                        for key in ("tp", "fp_class1", "fp_class2", "fn_class1", "fn_class2")
                    }
                    for cls in reports[0]["classes"]
                },
            }
        _write_json(out_dir / "severity.json", report, clock)
        print(f"error severity for {report['model_id']} ({report['context_mode']})")
        for cls, counts in report["classes"].items():
            print(
                f"  {cls:>5}: tp={counts['tp']} fp1={counts['fp_class1']} fp2={counts['fp_class2']}"
                f" fn1={counts['fn_class1']} fn2={counts['fn_class2']}"
            )
    else:
        raise ConfigurationError(f"unknown report kind {args.kind!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rob2kit", description="ROB2 assessment engine")
    parser.add_argument("--version", action="version", version=f"rob2kit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data", default="data", help="data directory (workspace or release)")
    common.add_argument("--out", default="out", help="output directory for reports")
    common.add_argument("--clock", default="system", help="system or fixed:<timestamp>")

    p = sub.add_parser("ingest", parents=[common], help="ingest parsed trial reports")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("assess", parents=[common], help="assess one document end to end")
    p.add_argument("--doc", required=True, help="document id")
    p.add_argument("--mode", default="topk:3")
    p.add_argument("--model", default=None,
                   help="model name, or stub / stub:fixed:<label>; falls back to LLM_MODEL then config")
    p.add_argument("--embedder", default="hash", help="hash (offline) or http:<model_id>")
    p.add_argument("--annotator", default="cli")
    p.set_defaults(func=cmd_assess)

    p_eval = sub.add_parser("eval", help="retrieval and QA benchmarks")
    eval_sub = p_eval.add_subparsers(dest="eval_kind", required=True)

    p = eval_sub.add_parser("retrieval", parents=[common])
    p.add_argument("--k", default="1,3,5,10")
    p.add_argument("--method", default="embedding,bm25")
    p.set_defaults(func=cmd_eval_retrieval)

    p = eval_sub.add_parser("qa", parents=[common])
    p.add_argument("--mode", required=True, help="oracle | topk:K | full")
    p.add_argument("--model", default=None, help="model name, stub variants, or stub:gold")
    p.add_argument("--fewshot", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--macro-axis", choices=["class", "question"], default="class")
    p.set_defaults(func=cmd_eval_qa)

    p = sub.add_parser("report", parents=[common], help="dataset and run reports")
    p.add_argument("kind", choices=["usage", "table2", "severity", "kappa", "distribution", "consistency"])
    p.add_argument("--run", action="append",
                   help="run cache jsonl (table2/severity; severity accepts several and averages)")
    p.add_argument("--macro-axis", choices=["class", "question"], default="class")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Rob2Error as exc:
        print(
            json.dumps({"error": {"code": exc.code, "message": str(exc)}}),
            file=sys.stderr,
        )
        return 2


if __name__ == "__main__":
    sys.exit(main())
