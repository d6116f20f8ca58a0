"""Exception taxonomy shared across the engine.

Every error that crosses a module boundary has a stable machine code so the
HTTP layer and CLI can map it without string matching.
"""

from __future__ import annotations


class Rob2Error(Exception):
    """Base class for all engine errors."""

    code = "internal_error"


class DocumentParseError(Rob2Error):
    code = "document_parse_error"


class EmptyDocumentError(Rob2Error):
    code = "empty_document"


class QuestionnaireSchemaError(Rob2Error):
    code = "questionnaire_schema_error"


class SequencingError(Rob2Error):
    """An answer required by a gate or rule walk is missing."""

    code = "sequencing_error"


class GatingError(Rob2Error):
    """Operation attempted on a question that cascade logic has skipped."""

    code = "gating_error"


class StateError(Rob2Error):
    """Session is in the wrong lifecycle state for the operation."""

    code = "state_error"


class ConfigurationError(Rob2Error):
    code = "configuration_error"


class IndexBuildError(Rob2Error):
    code = "index_build_error"


class RuleTableError(Rob2Error):
    """Rule file failed schema validation."""

    code = "rule_table_error"


class TotalityError(Rob2Error):
    """A rule-table walk reached a combination with no matching branch."""

    code = "rule_totality_error"


class UnparseableResponseError(Rob2Error):
    """Model output contained none of the canonical answer labels."""

    code = "unparseable_response"


class ContaminationError(Rob2Error):
    """Few-shot example overlaps with the evaluation set."""

    code = "fewshot_contamination"


class ContextOverflowError(Rob2Error):
    """Rendered prompt exceeds the configured context budget."""

    code = "context_overflow"


class LLMUpstreamError(Rob2Error):
    """LLM endpoint failed or returned a malformed payload."""

    code = "llm_upstream_error"


class DatasetError(Rob2Error):
    """Dataset missing, truncated, or of an unknown schema version."""

    code = "dataset_error"
