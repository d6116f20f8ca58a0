from __future__ import annotations

import pytest

from rob2kit.dataset import load_release
from rob2kit.documents import ingest_document
from rob2kit.embedders import HashEmbedder
from rob2kit.questionnaire import load_questionnaire
from rob2kit.refdata import generate_release
from rob2kit.retrieval import build_index
from rob2kit.rules import load_default_tables

RAW_DOC = {
    "title": "Efficacy of Drug X in Pediatric Asthma: a Randomized Trial",
    "authors": ["A. Author", "B. Author"],
    "abstract": [
        {
            "text": "We randomized 200 children to Drug X or placebo and measured symptom scores.",
            "section": "Abstract",
        }
    ],
    "body_text": [
        {
            "text": "Patients were assigned by alternation according to admission date.",
            "section": "Methods",
        },
        {
            "text": "The allocation sequence was computer generated using a random number table.",
            "section": "Methods",
        },
        {
            "text": "Baseline characteristics were similar across groups.",
            "section": "Results",
        },
    ],
}


@pytest.fixture(scope="session")
def questionnaire():
    return load_questionnaire()


@pytest.fixture(scope="session")
def rule_tables():
    return load_default_tables()


@pytest.fixture()
def fixture_doc():
    return ingest_document(RAW_DOC, doc_id="trial-fixture")


@pytest.fixture()
def hash_embedder():
    return HashEmbedder()


@pytest.fixture()
def fixture_index(fixture_doc, hash_embedder):
    return build_index(fixture_doc, hash_embedder)


@pytest.fixture(scope="session")
def release_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("reference-release")
    generate_release(out)
    return out


@pytest.fixture(scope="session")
def release(release_dir):
    return load_release(release_dir)
