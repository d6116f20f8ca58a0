#!/usr/bin/env python3
"""Generate the deterministic reference benchmark release.

Usage: python scripts/make_reference_release.py --out data/release [--seed N]
"""

from __future__ import annotations

import argparse

from rob2kit.refdata import DEFAULT_SEED, generate_release


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/release", help="output directory")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    args = parser.parse_args()
    manifest = generate_release(args.out, seed=args.seed)
    for key in sorted(manifest):
        print(f"{key}: {manifest[key]}")
    return 0


if __name__ == "__main__":
    main()
