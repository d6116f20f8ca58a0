#!/usr/bin/env python3
"""Regenerate the prompt golden files under tests/goldens/prompts/.

The golden suite pins the exact rendering of every question in every context
mode. Run this only when the template intentionally changes, then review the
diff carefully: the renderings are a compatibility surface.
"""

from __future__ import annotations

import sys
from pathlib import Path

from rob2kit.prompts import ContextMode, build_fewshot_prompt, build_prompt
from rob2kit.questionnaire import Answer, load_questionnaire

GOLDEN_DIR = Path(__file__).resolve().parent.parent / "tests" / "goldens" / "prompts"

# Frozen fixture passages shared with tests/test_prompts.py.
PASSAGES = [
    "Participants were randomly assigned (1:1) to receive the intervention or placebo using a computer-generated sequence.",
    "Allocation was concealed using sequentially numbered, opaque, sealed envelopes prepared by an independent statistician.",
    "Outcome assessors were blinded to treatment assignment throughout the study.",
    "Twelve participants (6%) were lost to follow-up, balanced across groups, mostly due to relocation.",
    "The primary outcome was change in symptom score at 12 weeks, analysed by intention to treat.",
]

FULL_DOC_PARAGRAPHS = [
    ("Abstract", "We conducted a randomized controlled trial of Drug X in 200 children."),
    ("Methods", "Participants were randomized using a computer-generated sequence with concealed allocation."),
    ("Methods", "Outcomes were assessed by blinded raters at 12 weeks."),
    ("Results", "Symptom scores improved more in the intervention group (p=0.03)."),
    ("", "Funding was provided by a national research council."),
]

FEWSHOT_EXAMPLES = [
    ("ex-doc-1", "1.1", "Was the allocation sequence random?",
     "Randomization was performed with a random number table.", Answer.YES),
    ("ex-doc-2", "1.1", "Was the allocation sequence random?",
     "Patients were allocated alternately by week of admission.", Answer.NO),
    ("ex-doc-3", "1.1", "Was the allocation sequence random?",
     "The study is described as randomized; no further detail is given.", Answer.NO_INFORMATION),
]


def golden_inputs():
    from rob2kit.prompts import FewshotExample

    examples = tuple(FewshotExample(*e) for e in FEWSHOT_EXAMPLES)
    full_passages = [
        f"{header}\n{text}" if header else text for header, text in FULL_DOC_PARAGRAPHS
    ]
    return {
        "oracle": (ContextMode.parse("oracle"), PASSAGES[:1], None),
        "topk1": (ContextMode.parse("topk:1"), PASSAGES[:1], None),
        "topk3": (ContextMode.parse("topk:3"), PASSAGES[:3], None),
        "topk5": (ContextMode.parse("topk:5"), PASSAGES[:5], None),
        "full": (ContextMode.parse("full"), full_passages, None),
        "fewshot": (ContextMode.parse("topk:1"), PASSAGES[:1], examples),
    }


def render_all() -> dict[str, str]:
    questionnaire = load_questionnaire()
    out = {}
    for mode_name, (mode, passages, examples) in golden_inputs().items():
        for q in questionnaire:
            if examples is None:
                text = build_prompt(q, mode, passages)
            else:
                text = build_fewshot_prompt(q, mode, passages, examples)
            out[f"{q.qid.replace('.', '_')}__{mode_name}.txt"] = text
    return out


def main() -> int:
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    renders = render_all()
    for name, text in sorted(renders.items()):
        (GOLDEN_DIR / name).write_text(text, "utf-8")
    print(f"wrote {len(renders)} golden prompts to {GOLDEN_DIR}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
