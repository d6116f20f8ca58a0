"""Trial-report data model and ingestion of the standardized parse JSON.

Input is the structured-document form produced by common PDF-to-JSON
pipelines: ``{title, authors, abstract: [{text, section}], body_text:
[{text, section}]}``. Abstract paragraphs are retrievable and are prepended
before the body so evidence stated only in the abstract can still be found.
Unknown fields are ignored; unicode is preserved verbatim apart from
trimming surrounding whitespace per paragraph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from .errors import DocumentParseError, EmptyDocumentError
from .utils import canonical_dumps, sha256_hex

EXPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Paragraph:
    index: int
    section_header: str
    text: str


@dataclass(frozen=True)
class TrialDocument:
    doc_id: str
    title: str
    authors: tuple[str, ...]
    abstract: str
    paragraphs: tuple[Paragraph, ...]

    def paragraph_texts(self) -> list[str]:
        return [p.text for p in self.paragraphs]

    def __len__(self) -> int:
        return len(self.paragraphs)


def _clean_entries(entries: Any, field: str) -> list[tuple[str, str]]:
    """Extract (text, section) pairs, skipping entries without usable text."""
    if entries is None:
        return []
    if not isinstance(entries, list):
        raise DocumentParseError(f"field {field!r} must be a list")
    out: list[tuple[str, str]] = []
    for entry in entries:
        if not isinstance(entry, Mapping):
            raise DocumentParseError(f"entries of {field!r} must be objects")
        text = entry.get("text", "")
        if not isinstance(text, str):
            raise DocumentParseError(f"entry text in {field!r} must be a string")
        text = text.strip()
        if not text:
            continue
        section = entry.get("section", "")
        out.append((text, section if isinstance(section, str) else ""))
    return out


def content_hash_id(title: str, paragraphs: Iterable[tuple[str, str]]) -> str:
    digest = sha256_hex(canonical_dumps({"title": title, "paragraphs": list(paragraphs)}))
    return f"sha256:{digest[:16]}"


def ingest_document(raw: str | bytes | Mapping[str, Any], doc_id: str | None = None) -> TrialDocument:
    """Parse a structured-document JSON payload into a TrialDocument.

    Abstract paragraphs (if any) come first, then body paragraphs, with
    contiguous indices assigned in that order. Raises DocumentParseError on
    malformed input and EmptyDocumentError when no paragraph survives.
    """
    if isinstance(raw, (str, bytes)):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise DocumentParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(raw, Mapping):
        raise DocumentParseError("document payload must be a JSON object")
    if "body_text" not in raw:
        raise DocumentParseError("missing required field 'body_text'")

    title = raw.get("title", "")
    if not isinstance(title, str):
        raise DocumentParseError("field 'title' must be a string")
    authors_raw = raw.get("authors", [])
    if not isinstance(authors_raw, list) or any(not isinstance(a, str) for a in authors_raw):
        raise DocumentParseError("field 'authors' must be a list of strings")

    abstract_entries = _clean_entries(raw.get("abstract"), "abstract")
    body_entries = _clean_entries(raw.get("body_text"), "body_text")
    entries = abstract_entries + body_entries
    if not entries:
        raise EmptyDocumentError("document has no extractable paragraphs")

    if doc_id is None:
        doc_id = raw.get("doc_id") if isinstance(raw.get("doc_id"), str) else None
    if not doc_id:
        doc_id = content_hash_id(title, entries)

    paragraphs = tuple(
        Paragraph(index=i, section_header=section, text=text)
        for i, (text, section) in enumerate(entries)
    )
    abstract = "\n\n".join(text for text, _ in abstract_entries)
    return TrialDocument(
        doc_id=doc_id,
        title=title,
        authors=tuple(authors_raw),
        abstract=abstract,
        paragraphs=paragraphs,
    )


def validate_document(doc: TrialDocument) -> list[str]:
    """Return human-readable invariant violations (empty list when valid)."""
    violations: list[str] = []
    if not doc.doc_id:
        violations.append("doc_id is empty")
    if not doc.paragraphs:
        violations.append("document has no paragraphs")
    for pos, para in enumerate(doc.paragraphs):
        if para.index != pos:
            violations.append(
                f"non-contiguous paragraph index: position {pos} has index {para.index}"
            )
        if not para.text.strip():
            violations.append(f"empty paragraph at index {para.index}")
    return violations


def document_to_dict(doc: TrialDocument) -> dict[str, Any]:
    return {
        "schema_version": EXPORT_SCHEMA_VERSION,
        "doc_id": doc.doc_id,
        "title": doc.title,
        "authors": list(doc.authors),
        "abstract": doc.abstract,
        "paragraphs": [
            {"index": p.index, "section_header": p.section_header, "text": p.text}
            for p in doc.paragraphs
        ],
    }


def document_from_dict(data: Mapping[str, Any]) -> TrialDocument:
    try:
        paragraphs = tuple(
            Paragraph(index=p["index"], section_header=p.get("section_header", ""), text=p["text"])
            for p in data["paragraphs"]
        )
        return TrialDocument(
            doc_id=data["doc_id"],
            title=data.get("title", ""),
            authors=tuple(data.get("authors", [])),
            abstract=data.get("abstract", ""),
            paragraphs=paragraphs,
        )
    except (KeyError, TypeError) as exc:
        raise DocumentParseError(f"bad canonical document payload: {exc}") from exc


def export_document_json(doc: TrialDocument) -> str:
    return canonical_dumps(document_to_dict(doc))
