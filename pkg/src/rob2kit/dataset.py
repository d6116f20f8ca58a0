"""Loading and interpreting a benchmark release directory.

A release is a directory with ``manifest.json``, ``documents.jsonl``
(canonical document exports), ``sessions.jsonl`` (canonical session
exports), and ``vectors.npz`` (sidecar reference embeddings). Papers with
two sessions are the dual-annotated reliability subset; the session with
the lexicographically smallest id is the primary one everywhere else.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .documents import TrialDocument, document_from_dict
from .embedders import SidecarVectors
from .errors import DatasetError
from .store import AssessmentSession, QuestionRecord, import_session

MANIFEST_NAME = "manifest.json"

MISSING_DATASET_HINT = (
    "no release found at {path}: expected manifest.json, documents.jsonl, "
    "sessions.jsonl and vectors.npz. Generate the bundled reference release "
    "with `python scripts/make_reference_release.py --out {path}` or point "
    "--data at a directory containing a release."
)


@dataclass
class Release:
    root: Path
    manifest: dict
    documents: dict[str, TrialDocument]
    sessions: list[AssessmentSession]
    vectors: SidecarVectors | None

    def primary_sessions(self) -> list[AssessmentSession]:
        """One session per paper (smallest session_id wins)."""
        best: dict[str, AssessmentSession] = {}
        for s in self.sessions:
            cur = best.get(s.doc_id)
            if cur is None or s.session_id < cur.session_id:
                best[s.doc_id] = s
        return [best[doc_id] for doc_id in sorted(best)]

    def dual_annotated_pairs(self) -> list[tuple[AssessmentSession, AssessmentSession]]:
        """(primary, second-rater) session pairs for papers with two sessions."""
        by_doc: dict[str, list[AssessmentSession]] = {}
        for s in self.sessions:
            by_doc.setdefault(s.doc_id, []).append(s)
        pairs = []
        for doc_id in sorted(by_doc):
            group = sorted(by_doc[doc_id], key=lambda s: s.session_id)
            if len(group) >= 2:
                pairs.append((group[0], group[1]))
        return pairs

    def subset(self, provenance: str) -> list[AssessmentSession]:
        return [s for s in self.primary_sessions() if s.provenance == provenance]


def gold_evidence_index(record: QuestionRecord) -> int | None:
    """The annotator-designated evidence paragraph for a question, if any.

    Policy: the paragraph with a current upvote wins; otherwise the first
    user-added paragraph; otherwise there is no gold evidence.
    """
    latest: dict[int, str] = {}
    for idx, direction in record.votes:
        latest[idx] = direction
    for idx, direction in record.votes:
        if latest[idx] == "up" and direction == "up":
            return idx
    if record.added_paragraphs:
        return record.added_paragraphs[0]
    return None


def gold_instances(release: Release) -> list[tuple[str, str, int]]:
    """(doc_id, qid, gold_paragraph_index) for every gold-evidence question."""
    out = []
    for session in release.primary_sessions():
        for qid in sorted(session.records):
            gold = gold_evidence_index(session.records[qid])
            if gold is not None:
                out.append((session.doc_id, qid, gold))
    return out


def load_release(path: str | Path) -> Release:
    root = Path(path)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.exists():
        # allow --data to point at a parent directory containing release/
        nested = root / "release" / MANIFEST_NAME
        if nested.exists():
            root = root / "release"
            manifest_path = nested
        else:
            raise DatasetError(MISSING_DATASET_HINT.format(path=root))
    try:
        manifest = json.loads(manifest_path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetError(f"malformed manifest: {exc}") from exc

    documents: dict[str, TrialDocument] = {}
    docs_path = root / "documents.jsonl"
    if not docs_path.exists():
        raise DatasetError(f"release at {root} is missing documents.jsonl")
    with docs_path.open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                doc = document_from_dict(json.loads(line))
                documents[doc.doc_id] = doc

    sessions: list[AssessmentSession] = []
    sessions_path = root / "sessions.jsonl"
    if not sessions_path.exists():
        raise DatasetError(f"release at {root} is missing sessions.jsonl")
    with sessions_path.open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                sessions.append(import_session(line))

    vectors = None
    vectors_path = root / "vectors.npz"
    if vectors_path.exists():
        vectors = SidecarVectors.load(vectors_path)

    return Release(
        root=root, manifest=manifest, documents=documents, sessions=sessions, vectors=vectors
    )
