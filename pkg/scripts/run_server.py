#!/usr/bin/env python3
"""Run the HTTP service.

Environment: LLM_BASE_URL / LLM_MODEL / LLM_API_KEY select the answer model
(offline stub when unset), ROB2KIT_DATA picks the data directory, and
ROB2KIT_BIND the bind address.

Usage: python scripts/run_server.py [--port 8000]
"""

from __future__ import annotations

import argparse
import os
from pathlib import Path

import uvicorn

from rob2kit.api import ServiceConfig, create_app
from rob2kit.llm import GenerationConfig, HttpLLMClient, StubLLM


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--host", default=os.environ.get("ROB2KIT_BIND", "127.0.0.1"))
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--data", default=os.environ.get("ROB2KIT_DATA", "data/service"))
    args = parser.parse_args()

    base_url = os.environ.get("LLM_BASE_URL")
    model = os.environ.get("LLM_MODEL", "stub")
    if base_url and not model.startswith("stub"):
        llm = HttpLLMClient(base_url, api_key=os.environ.get("LLM_API_KEY", ""))
    else:
        llm = StubLLM.parse_spec(model if model.startswith("stub") else "stub")
    config = ServiceConfig(
        data_dir=Path(args.data),
        llm=llm,
        generation=GenerationConfig(model=model),
    )
    uvicorn.run(create_app(config), host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    main()
