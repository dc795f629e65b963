"""Cloze prompt assembly.

A context is a pattern rendered over a neighbor's text with the mask already
replaced by that neighbor's verbalized label — a worked example. The final
prompt is zero or more contexts followed by the pattern rendered over the
input with its mask left open, joined by single spaces. Exactly one mask must
survive into the output; that invariant is what makes the score request
well-defined.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import MASK, Label, PatternTemplate, Sample, TaskSpec
from .errors import DataError

MAX_PROMPT_CHARS = 4000


@dataclass(frozen=True)
class AssembledPrompt:
    """Final prompt text plus everything needed to interpret a score response."""

    text: str
    mask_position: int
    candidates: tuple[str, ...]
    provenance: tuple[str, ...] = ()


def _segment_map(sample: Sample, arity: int) -> dict[str, str]:
    if len(sample.segments) != arity:
        raise DataError(
            f"sample {sample.id!r} has {len(sample.segments)} segments, "
            f"pattern expects {arity}"
        )
    if arity == 1:
        return {"[X]": sample.segments[0]}
    return {"[X1]": sample.segments[0], "[X2]": sample.segments[1]}


def apply_pattern(pattern: PatternTemplate, sample: Sample) -> str:
    """Render a pattern over a sample, leaving the mask open."""
    substitutions = _segment_map(sample, pattern.arity)
    substitutions[MASK] = MASK
    return pattern.render(substitutions)


def build_context(pattern: PatternTemplate, sample: Sample, label: Label, spec: TaskSpec) -> str:
    """Render a worked example: the pattern with the mask filled by the label's word."""
    substitutions = _segment_map(sample, pattern.arity)
    substitutions[MASK] = spec.verbalize(label)
    rendered = pattern.render(substitutions)
    if MASK in rendered:
        raise DataError(
            f"context built from sample {sample.id!r} still contains {MASK}; "
            "segment text must not embed the mask token"
        )
    return rendered


def assemble_prompt(
    contexts: list[str],
    input_sample: Sample,
    pattern: PatternTemplate,
    spec: TaskSpec,
    *,
    provenance: tuple[str, ...] = (),
    separator: str = " ",
    max_prompt_chars: int = MAX_PROMPT_CHARS,
) -> AssembledPrompt:
    """Join contexts and the open-mask input rendering into one prompt.

    Enforces the exactly-one-mask invariant and the hard length ceiling; both
    violations are data errors, never silent truncation.
    """
    for i, context in enumerate(contexts):
        if MASK in context:
            raise DataError(f"context {i} still contains {MASK}: {context!r}")
    prompted = apply_pattern(pattern, input_sample)
    text = separator.join([*contexts, prompted])
    mask_count = text.count(MASK)
    if mask_count != 1:
        raise DataError(
            f"assembled prompt for {input_sample.id!r} contains {mask_count} "
            f"{MASK} tokens, expected exactly 1"
        )
    if len(text) > max_prompt_chars:
        raise DataError(
            f"assembled prompt for {input_sample.id!r} is {len(text)} chars, "
            f"limit is {max_prompt_chars}"
        )
    return AssembledPrompt(
        text=text,
        mask_position=text.index(MASK),
        candidates=spec.verbalizer_words,
        provenance=provenance,
    )
