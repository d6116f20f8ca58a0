from __future__ import annotations

import json

import pytest
from hypothesis import given, strategies as st

from rob2kit.documents import (
    Paragraph,
    TrialDocument,
    document_from_dict,
    document_to_dict,
    export_document_json,
    ingest_document,
    validate_document,
)
from rob2kit.errors import DocumentParseError, EmptyDocumentError

from conftest import RAW_DOC


def reference_ingest(raw: dict) -> list[tuple[int, str, str]]:
    """Hand-written reference ingester used as an independent oracle."""
    rows = []
    i = 0
    for entry in (raw.get("abstract") or []) + (raw.get("body_text") or []):
        text = entry["text"].strip()
        if not text:
            continue
        rows.append((i, entry.get("section", ""), text))
        i += 1
    return rows


def test_ingest_indexes_in_order():
    doc = ingest_document({"title": "T", "body_text": [{"text": "p one"}, {"text": "p two"}]})
    assert [p.index for p in doc.paragraphs] == [0, 1]
    assert [p.text for p in doc.paragraphs] == ["p one", "p two"]


def test_ingest_matches_reference_on_fixture():
    doc = ingest_document(RAW_DOC)
    expected = reference_ingest(RAW_DOC)
    assert len(doc.paragraphs) == 4
    assert doc.paragraphs[0].section_header == "Abstract"
    got = [(p.index, p.section_header, p.text) for p in doc.paragraphs]
    assert got == expected


def test_paragraph_count_is_abstract_plus_body():
    doc = ingest_document(RAW_DOC)
    assert len(doc.paragraphs) == len(RAW_DOC["abstract"]) + len(RAW_DOC["body_text"])


def test_empty_body_is_an_error():
    with pytest.raises(EmptyDocumentError):
        ingest_document({"title": "T", "body_text": []})


def test_whitespace_only_paragraphs_are_skipped():
    doc = ingest_document({"body_text": [{"text": "  \n "}, {"text": "real"}]})
    assert len(doc.paragraphs) == 1


def test_malformed_json_is_a_parse_error():
    with pytest.raises(DocumentParseError):
        ingest_document('{"title": "T", "body_text": [')
    with pytest.raises(DocumentParseError):
        ingest_document({"title": "T"})  # no body_text at all


def test_unknown_fields_are_ignored():
    raw = dict(RAW_DOC, ref_entries={"FIG1": {}}, pdf_parse_info={"x": 1})
    assert len(ingest_document(raw).paragraphs) == 4


def test_ingest_is_deterministic_and_content_addressed():
    blob = json.dumps(RAW_DOC)
    a, b = ingest_document(blob), ingest_document(blob)
    assert a == b
    assert a.doc_id.startswith("sha256:")


def test_validate_clean_doc(fixture_doc):
    assert validate_document(fixture_doc) == []


def test_validate_flags_noncontiguous_and_empty():
    doc = TrialDocument(
        doc_id="d",
        title="",
        authors=(),
        abstract="",
        paragraphs=(Paragraph(0, "", "ok"), Paragraph(2, "", "  ")),
    )
    violations = validate_document(doc)
    assert any("non-contiguous" in v for v in violations)
    assert any("empty paragraph" in v for v in violations)


text_strategy = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=40
).filter(lambda s: s.strip())


@given(
    title=st.text(max_size=30),
    sections=st.lists(
        st.tuples(text_strategy, st.text(max_size=10)), min_size=1, max_size=8
    ),
)
def test_export_import_round_trip(title, sections):
    raw = {"title": title, "body_text": [{"text": t, "section": s} for t, s in sections]}
    doc = ingest_document(raw, doc_id="roundtrip")
    again = document_from_dict(json.loads(export_document_json(doc)))
    assert again == doc
    assert document_to_dict(again) == document_to_dict(doc)
