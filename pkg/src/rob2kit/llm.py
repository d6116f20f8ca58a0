"""Provider-agnostic chat-completion client with audit logging.

The wire protocol is the common chat-completions JSON shape. Endpoint,
model, and credentials come from configuration or the environment
(LLM_BASE_URL, LLM_MODEL, LLM_API_KEY). Every call and response can be
journaled to a JSON-lines audit log; retries never mutate the prompt.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Protocol

import httpx

from .errors import ConfigurationError, ContextOverflowError, LLMUpstreamError
from .utils import SystemClock, sha256_hex


@dataclass(frozen=True)
class GenerationConfig:
    model: str
    temperature: float = 0.0
    max_output_tokens: int = 512
    # Prompt budget in characters; full-paper prompts that exceed it fail
    # loudly instead of being truncated.
    context_chars: int = 480_000


class LLMClient(Protocol):
    def complete(
        self, prompt: str, config: GenerationConfig, tags: Mapping[str, str] | None = None
    ) -> str: ...


class AuditLog:
    """Append-only JSON-lines journal of raw requests and responses."""

    def __init__(self, path: str | Path, clock=None):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._clock = clock or SystemClock()
        self._lock = threading.Lock()

    def write(self, event: str, payload: Mapping) -> None:
        record = {"ts": self._clock.now(), "event": event, **payload}
        line = json.dumps(record, sort_keys=True, ensure_ascii=False)
        with self._lock:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")


class HttpLLMClient:
    """Chat-completions HTTP client (POST {base_url}/chat/completions)."""

    def __init__(
        self,
        base_url: str,
        api_key: str = "",
        timeout: float = 120.0,
        audit: AuditLog | None = None,
        transport: httpx.BaseTransport | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.audit = audit
        self._client = httpx.Client(timeout=timeout, transport=transport)

    @classmethod
    def from_env(cls, audit: AuditLog | None = None) -> "HttpLLMClient":
        base_url = os.environ.get("LLM_BASE_URL")
        if not base_url:
            raise ConfigurationError("LLM_BASE_URL is not set")
        return cls(base_url, api_key=os.environ.get("LLM_API_KEY", ""), audit=audit)

    def complete(
        self, prompt: str, config: GenerationConfig, tags: Mapping[str, str] | None = None
    ) -> str:
        if len(prompt) > config.context_chars:
            raise ContextOverflowError(
                f"prompt of {len(prompt)} chars exceeds budget {config.context_chars}"
            )
        body = {
            "model": config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": config.temperature,
            "max_tokens": config.max_output_tokens,
        }
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        if self.audit:
            self.audit.write("llm_request", {"request": body, "tags": dict(tags or {})})
        try:
            resp = self._client.post(
                f"{self.base_url}/chat/completions", json=body, headers=headers
            )
            resp.raise_for_status()
            data = resp.json()
            text = data["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            if self.audit:
                self.audit.write("llm_error", {"error": str(exc), "tags": dict(tags or {})})
            raise LLMUpstreamError(f"chat completion failed: {exc}") from exc
        if self.audit:
            self.audit.write(
                "llm_response",
                {"response": text, "digest": sha256_hex(text), "tags": dict(tags or {})},
            )
        return text


@dataclass
class StubLLM:
    """Deterministic offline model for tests and dry runs.

    ``fixed`` always returns the same label; ``cycle`` walks through the five
    labels call by call. ``script`` overrides both when provided: it maps a
    (doc_id, qid) tag pair to a full response string.
    """

    behavior: str = "cycle"
    fixed_label: str = "no information"
    script: Mapping[tuple[str, str], str] | None = None
    calls: list[dict] = field(default_factory=list)

    _CYCLE = ("yes", "probably yes", "no", "probably no", "no information")

    def complete(
        self, prompt: str, config: GenerationConfig, tags: Mapping[str, str] | None = None
    ) -> str:
        if len(prompt) > config.context_chars:
            raise ContextOverflowError(
                f"prompt of {len(prompt)} chars exceeds budget {config.context_chars}"
            )
        tags = dict(tags or {})
        self.calls.append({"prompt": prompt, "tags": tags})
        if self.script is not None:
            key = (tags.get("doc_id", ""), tags.get("qid", ""))
            if key in self.script:
                return self.script[key]
        if self.behavior == "fixed":
            label = self.fixed_label
        else:
            label = self._CYCLE[(len(self.calls) - 1) % len(self._CYCLE)]
        return f"Answer: {label}. Deterministic stub rationale for this question."

    @classmethod
    def parse_spec(cls, spec: str) -> "StubLLM":
        """Build from a CLI spec: ``stub``, ``stub:cycle`` or ``stub:fixed:<label>``."""
        parts = spec.split(":")
        if parts == ["stub"] or parts == ["stub", "cycle"]:
            return cls(behavior="cycle")
        if len(parts) == 3 and parts[1] == "fixed":
            return cls(behavior="fixed", fixed_label=parts[2].replace("_", " "))
        raise ConfigurationError(f"cannot parse stub model spec {spec!r}")
