from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from rob2kit.errors import ContaminationError, UnparseableResponseError
from rob2kit.prompts import (
    ContextMode,
    FewshotExample,
    build_fewshot_prompt,
    build_prompt,
    parse_answer,
)
from rob2kit.questionnaire import Answer

import sys

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "scripts"))
from regen_prompt_goldens import GOLDEN_DIR, render_all  # noqa: E402

A = Answer


def test_all_132_renderings_match_checked_in_goldens():
    renders = render_all()
    assert len(renders) == 132
    for name, text in renders.items():
        golden = (GOLDEN_DIR / name).read_text("utf-8")
        assert text == golden, f"prompt rendering drifted for {name}"


def test_rendering_is_deterministic(questionnaire):
    q = questionnaire.by_qid("1.1")
    mode = ContextMode.parse("topk:2")
    a = build_prompt(q, mode, ["first passage", "second passage"])
    b = build_prompt(q, mode, ["first passage", "second passage"])
    assert a == b


def test_passages_appear_in_given_order(questionnaire):
    q = questionnaire.by_qid("1.1")
    prompt = build_prompt(q, ContextMode.parse("topk:3"), ["AAA", "BBB", "CCC"])
    assert prompt.index("AAA") < prompt.index("BBB") < prompt.index("CCC")


def test_empty_passages_rejected_for_oracle_and_topk(questionnaire):
    q = questionnaire.by_qid("1.1")
    with pytest.raises(ValueError):
        build_prompt(q, ContextMode.parse("oracle"), [])
    with pytest.raises(ValueError):
        build_prompt(q, ContextMode.parse("topk:3"), [])


def test_fewshot_zero_examples_equals_zero_shot_minus_elaboration(questionnaire):
    q = questionnaire.by_qid("1.2")
    mode = ContextMode.parse("topk:1")
    few = build_fewshot_prompt(q, mode, ["passage text"], [])
    zero = build_prompt(q, mode, ["passage text"])
    assert q.elaboration not in few
    assert q.elaboration in zero
    assert few == zero.replace(f'\n\nElaboration: "{q.elaboration}"', "")


def test_fewshot_blocks_have_answers_and_target_does_not(questionnaire):
    q = questionnaire.by_qid("1.1")
    examples = [
        FewshotExample("d1", "1.1", q.text, "passage one", A.YES),
        FewshotExample("d2", "1.1", q.text, "passage two", A.NO),
        FewshotExample("d3", "1.1", q.text, "passage three", A.NO_INFORMATION),
    ]
    prompt = build_fewshot_prompt(q, ContextMode.parse("topk:1"), ["target passage"], examples)
    assert prompt.count("Answer:") == 3
    assert prompt.rstrip().endswith("target passage")
    assert "Answer:yes" in prompt and "Answer:no information" in prompt


def test_fewshot_contamination_check(questionnaire):
    q = questionnaire.by_qid("1.1")
    examples = [FewshotExample("eval-doc", "1.1", q.text, "p", A.YES)]
    with pytest.raises(ContaminationError):
        build_fewshot_prompt(
            q, ContextMode.parse("topk:1"), ["t"], examples, evaluation_keys={("eval-doc", "1.1")}
        )


def test_context_mode_parsing():
    assert str(ContextMode.parse("topk:3")) == "topk:3"
    assert ContextMode.parse("oracle").kind == "oracle"
    assert ContextMode.parse("full").kind == "full"
    with pytest.raises(ValueError):
        ContextMode.parse("topk:0")
    with pytest.raises(ValueError):
        ContextMode.parse("bogus")


# --- answer parsing ----------------------------------------------------------


def test_parse_direct_match_with_rationale():
    answer, rationale = parse_answer("Answer: probably no. The trial used alternation by date.")
    assert answer is A.PROBABLY_NO
    assert rationale == "The trial used alternation by date."


def test_parse_longest_match_wins():
    answer, _ = parse_answer("No information is provided about concealment")
    assert answer is A.NO_INFORMATION
    answer, _ = parse_answer("probably yes, given the CONSORT description")
    assert answer is A.PROBABLY_YES


def test_parse_is_case_insensitive():
    assert parse_answer("PROBABLY NO")[0] is A.PROBABLY_NO
    assert parse_answer("Yes.")[0] is A.YES


def test_parse_word_boundaries():
    # "no" inside "cannot"/"notes" must not match
    with pytest.raises(UnparseableResponseError):
        parse_answer("We cannot tell; the notes are unclear.")


def test_parse_first_occurrence_wins():
    answer, rationale = parse_answer("yes; although some would argue no.")
    assert answer is A.YES
    assert rationale == "although some would argue no."


def test_unparseable_raises():
    with pytest.raises(UnparseableResponseError):
        parse_answer("The study seems fine.")


@given(st.sampled_from(["yes", "no", "probably yes", "probably no", "no information"]),
       st.text(alphabet="abcdefg hijk", max_size=30))
def test_parse_round_trips_canonical_labels(label, tail):
    raw = f"Answer: {label}. {tail}"
    answer, _ = parse_answer(raw)
    from rob2kit.prompts import LABEL_OF_ANSWER

    assert LABEL_OF_ANSWER[answer] == label
