"""Small shared helpers: canonical JSON and injectable clocks."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
from typing import Any


def canonical_dumps(obj: Any, *, pretty: bool = False) -> str:
    """Serialize to a byte-stable JSON string (sorted keys, fixed separators)."""
    if pretty:
        return json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=2)
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


class SystemClock:
    """Wall-clock timestamps in UTC ISO-8601."""

    def now(self) -> str:
        return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


class FixedClock:
    """Deterministic clock: a fixed timestamp plus a per-call tick counter.

    Reproducible runs (stub models, golden exports) need stable timestamps;
    the tick preserves event ordering without touching the wall clock.
    """

    def __init__(self, start: str = "2024-01-01T00:00:00Z", tick: bool = False):
        self.start = start
        self.tick = tick
        self._n = 0

    def now(self) -> str:
        if not self.tick:
            return self.start
        self._n += 1
        return f"{self.start}#{self._n:06d}"


def parse_clock_spec(spec: str):
    """Build a clock from a CLI spec: ``system`` or ``fixed:<timestamp>``."""
    if spec == "system":
        return SystemClock()
    if spec.startswith("fixed:"):
        return FixedClock(spec.split(":", 1)[1] or "2024-01-01T00:00:00Z")
    raise ValueError(f"unknown clock spec: {spec!r}")
