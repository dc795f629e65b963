import random

import pytest

from parc import (
    DataError,
    Label,
    PatternTemplate,
    Sample,
    apply_pattern,
    assemble_prompt,
    build_context,
)


@pytest.fixture
def pattern():
    return PatternTemplate("[X] All in all, it was [MASK].")


def test_apply_pattern_leaves_mask_open(pattern):
    out = apply_pattern(pattern, Sample("a", ("Great shoes.",), "en"))
    assert out == "Great shoes. All in all, it was [MASK]."


def test_apply_pattern_pair():
    p = PatternTemplate("[X1]? [MASK], [X2]")
    s = Sample("a", ("He slept", "he was tired."), "en")
    assert apply_pattern(p, s) == "He slept? [MASK], he was tired."


def test_apply_pattern_segment_count_mismatch(pattern):
    with pytest.raises(DataError, match="'two'"):
        apply_pattern(pattern, Sample("two", ("a", "b"), "en"))


def test_build_context_fills_mask(pattern, amazon_task):
    s = Sample("p1", ("Loved it.",), "en", Label(1, "pos"))
    out = build_context(pattern, s, Label(1, "pos"), amazon_task)
    assert out == "Loved it. All in all, it was great."
    assert "[MASK]" not in out


def test_build_context_rejects_mask_in_segment(pattern, amazon_task):
    s = Sample("evil", ("text with [MASK] inside",), "en")
    with pytest.raises(DataError, match="'evil'"):
        build_context(pattern, s, Label(0, "neg"), amazon_task)


def test_build_context_rejects_foreign_label(pattern, amazon_task):
    s = Sample("a", ("ok",), "en")
    with pytest.raises(DataError):
        build_context(pattern, s, Label(7, "mystery"), amazon_task)


def test_assemble_orders_contexts_before_input(pattern, amazon_task):
    contexts = [
        "Bad phone. All in all, it was terrible.",
        "Nice hat. All in all, it was great.",
    ]
    inp = Sample("q", ("Unsure about this one.",), "te")
    prompt = assemble_prompt(contexts, inp, pattern, amazon_task)
    assert prompt.text == (
        "Bad phone. All in all, it was terrible. "
        "Nice hat. All in all, it was great. "
        "Unsure about this one. All in all, it was [MASK]."
    )
    assert prompt.candidates == ("terrible", "great")
    assert prompt.text[prompt.mask_position : prompt.mask_position + 6] == "[MASK]"


def test_assemble_without_contexts_is_apply_pattern(pattern, amazon_task):
    """Zero contexts: the prompt must be byte-identical to the bare rendering."""
    rng = random.Random(404)
    alphabet = "abcd ఆక!?"
    for _ in range(100):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 60)))
        s = Sample("x", (text,), "te")
        prompt = assemble_prompt([], s, pattern, amazon_task)
        assert prompt.text == apply_pattern(pattern, s)


def test_assemble_rejects_mask_in_context(pattern, amazon_task):
    inp = Sample("q", ("fine",), "te")
    with pytest.raises(DataError, match="context 1"):
        assemble_prompt(["clean context.", "dirty [MASK] context."], inp, pattern, amazon_task)


def test_assemble_rejects_mask_in_input_text(pattern, amazon_task):
    inp = Sample("q", ("sneaky [MASK] text",), "te")
    with pytest.raises(DataError, match="expected exactly 1"):
        assemble_prompt([], inp, pattern, amazon_task)


def test_assemble_enforces_length_ceiling(pattern, amazon_task):
    inp = Sample("q", ("y" * 50,), "te")
    with pytest.raises(DataError, match="limit is 60"):
        assemble_prompt([], inp, pattern, amazon_task, max_prompt_chars=60)
    # One char under the rendered length passes with a roomier ceiling.
    assemble_prompt([], inp, pattern, amazon_task, max_prompt_chars=200)


def test_assemble_custom_separator(pattern, amazon_task):
    inp = Sample("q", ("ok",), "te")
    prompt = assemble_prompt(["A context here."], inp, pattern, amazon_task, separator="\n")
    assert prompt.text.count("\n") == 1


def test_provenance_is_carried(pattern, amazon_task):
    inp = Sample("q", ("ok",), "te")
    prompt = assemble_prompt([], inp, pattern, amazon_task, provenance=("en-03",))
    assert prompt.provenance == ("en-03",)


def test_mask_position_always_points_at_mask(amazon_task):
    """mask_position is the byte offset of the single surviving mask."""
    rng = random.Random(11)
    patterns = [
        PatternTemplate("[X] [MASK]"),
        PatternTemplate("[MASK]: [X]"),
        PatternTemplate("Just [MASK]! [X]"),
    ]
    for _ in range(200):
        pattern = rng.choice(patterns)
        text = "".join(rng.choice("ab చx ") for _ in range(rng.randint(1, 40)))
        contexts = [f"ctx {i}." for i in range(rng.randint(0, 3))]
        prompt = assemble_prompt(contexts, Sample("s", (text,), "te"), pattern, amazon_task)
        assert prompt.text[prompt.mask_position : prompt.mask_position + 6] == "[MASK]"
        assert prompt.text.count("[MASK]") == 1
