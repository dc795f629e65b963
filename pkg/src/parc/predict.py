"""Label prediction from scored cloze prompts.

Two ways to use retrieved neighbors:

* bag of contexts ("bor") — one single-context prompt per neighbor, scored
  independently; per-label probabilities are summed across neighbors. The
  sum uses exact float summation, so the result is identical under any
  reordering of the neighbors.
* concatenation ("conc") — all neighbor contexts joined into one long prompt
  in rank order, scored once.

Neighbor labels come from gold annotations ("labeled" mode) or from the
model's own context-free predictions over the pool ("unlabeled" mode).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .corpus import Corpus, Label, PatternTemplate, Sample, TaskSpec
from .errors import BackendError, ConfigError, DataError
from .prompts import MAX_PROMPT_CHARS, assemble_prompt, build_context
from .retrieval import RetrievalHit
from .scoring import ScorerBackend, ScoreVector


@dataclass(frozen=True)
class Prediction:
    """One classified input: the winning label plus the evidence behind it."""

    input_id: str
    label: Label
    per_label_score: tuple[float, ...]
    mode: str  # "labeled" | "unlabeled"
    strategy: str  # "bor" | "conc" | "single"
    k: int
    context_ids: tuple[str, ...]


def predict_label(scores: tuple[float, ...] | list[float], spec: TaskSpec) -> Label:
    """The label whose score is highest; ties go to the lowest label index."""
    if len(scores) != len(spec.labels):
        raise DataError(
            f"{len(scores)} scores for {len(spec.labels)} labels in task {spec.task_id!r}"
        )
    if all(s == 0.0 for s in scores):
        raise BackendError("all candidate scores are zero; cannot pick a label")
    best = max(range(len(scores)), key=lambda i: (scores[i], -i))
    return spec.labels[best]


def self_predict(
    sample: Sample,
    pattern: PatternTemplate,
    spec: TaskSpec,
    scorer: ScorerBackend,
    *,
    max_prompt_chars: int = MAX_PROMPT_CHARS,
) -> Label:
    """Classify a sample with a context-free prompt (used to pseudo-label pools)."""
    prompt = assemble_prompt(
        [], sample, pattern, spec, max_prompt_chars=max_prompt_chars
    )
    (vector,) = scorer.score([prompt.text], prompt.candidates)
    return predict_label(vector.probs, spec)


def _context_label(
    hit: RetrievalHit,
    mode: str,
    pool: Corpus,
    pattern: PatternTemplate,
    spec: TaskSpec,
    scorer: ScorerBackend,
    self_cache: dict[str, Label] | None,
    max_prompt_chars: int,
) -> Label:
    sample = pool.by_id(hit.sample_id)
    if mode == "labeled":
        if sample.gold_label is None:
            raise DataError(
                f"labeled mode needs gold labels, pool sample {sample.id!r} has none"
            )
        return sample.gold_label
    if mode == "unlabeled":
        if self_cache is not None and sample.id in self_cache:
            return self_cache[sample.id]
        label = self_predict(
            sample, pattern, spec, scorer, max_prompt_chars=max_prompt_chars
        )
        if self_cache is not None:
            self_cache[sample.id] = label
        return label
    raise ConfigError(f"mode must be 'labeled' or 'unlabeled', got {mode!r}")


def predict_bor(
    input_sample: Sample,
    hits: list[RetrievalHit],
    mode: str,
    spec: TaskSpec,
    pattern: PatternTemplate,
    scorer: ScorerBackend,
    pool: Corpus,
    *,
    renormalize_parts: bool = True,
    self_cache: dict[str, Label] | None = None,
    max_prompt_chars: int = MAX_PROMPT_CHARS,
    separator: str = " ",
) -> Prediction:
    """Bag-of-contexts prediction: score one prompt per neighbor, sum per label.

    Summation uses `math.fsum`, so the per-label totals — and therefore the
    predicted label — are exactly invariant under neighbor reordering.
    """
    if not hits:
        raise DataError(f"bag-of-contexts needs at least one neighbor for {input_sample.id!r}")
    prompts = []
    for hit in hits:
        label = _context_label(
            hit, mode, pool, pattern, spec, scorer, self_cache, max_prompt_chars
        )
        context = build_context(pattern, pool.by_id(hit.sample_id), label, spec)
        prompts.append(
            assemble_prompt(
                [context],
                input_sample,
                pattern,
                spec,
                provenance=(hit.sample_id,),
                separator=separator,
                max_prompt_chars=max_prompt_chars,
            )
        )
    vectors = scorer.score([p.text for p in prompts], spec.verbalizer_words)
    if renormalize_parts:
        vectors = [v.renormalize() for v in vectors]
    totals = tuple(
        math.fsum(vector.probs[i] for vector in vectors)
        for i in range(len(spec.labels))
    )
    return Prediction(
        input_id=input_sample.id,
        label=predict_label(totals, spec),
        per_label_score=totals,
        mode=mode,
        strategy="bor",
        k=len(hits),
        context_ids=tuple(hit.sample_id for hit in hits),
    )


def predict_conc(
    input_sample: Sample,
    hits: list[RetrievalHit],
    mode: str,
    spec: TaskSpec,
    pattern: PatternTemplate,
    scorer: ScorerBackend,
    pool: Corpus,
    *,
    renormalize_parts: bool = True,
    self_cache: dict[str, Label] | None = None,
    max_prompt_chars: int = MAX_PROMPT_CHARS,
    separator: str = " ",
) -> Prediction:
    """Concatenation prediction: all contexts in rank order, one scored prompt."""
    if not hits:
        raise DataError(f"concatenation needs at least one neighbor for {input_sample.id!r}")
    ordered = sorted(hits, key=lambda h: h.rank)
    contexts = []
    for hit in ordered:
        label = _context_label(
            hit, mode, pool, pattern, spec, scorer, self_cache, max_prompt_chars
        )
        contexts.append(build_context(pattern, pool.by_id(hit.sample_id), label, spec))
    prompt = assemble_prompt(
        contexts,
        input_sample,
        pattern,
        spec,
        provenance=tuple(hit.sample_id for hit in ordered),
        separator=separator,
        max_prompt_chars=max_prompt_chars,
    )
    (vector,) = scorer.score([prompt.text], prompt.candidates)
    if renormalize_parts:
        vector = vector.renormalize()
    return Prediction(
        input_id=input_sample.id,
        label=predict_label(vector.probs, spec),
        per_label_score=vector.probs,
        mode=mode,
        strategy="conc",
        k=len(hits),
        context_ids=prompt.provenance,
    )


def predict_direct(
    input_sample: Sample,
    spec: TaskSpec,
    pattern: PatternTemplate,
    scorer: ScorerBackend,
    *,
    max_prompt_chars: int = MAX_PROMPT_CHARS,
) -> Prediction:
    """Context-free prediction: the input's own cloze prompt, nothing retrieved."""
    prompt = assemble_prompt(
        [], input_sample, pattern, spec, max_prompt_chars=max_prompt_chars
    )
    (vector,) = scorer.score([prompt.text], prompt.candidates)
    return Prediction(
        input_id=input_sample.id,
        label=predict_label(vector.probs, spec),
        per_label_score=vector.probs,
        mode="unlabeled",  # no neighbor labels are consumed, gold or otherwise
        strategy="single",
        k=0,
        context_ids=(),
    )


class Predictor:
    """Binds task, pattern, scorer, and pool; memoizes pool self-predictions.

    In unlabeled mode each pool sample is self-predicted at most once per
    predictor instance, no matter how many inputs retrieve it.
    """

    def __init__(
        self,
        spec: TaskSpec,
        pattern: PatternTemplate,
        scorer: ScorerBackend,
        pool: Corpus,
        mode: str,
        *,
        renormalize_parts: bool = True,
        max_prompt_chars: int = MAX_PROMPT_CHARS,
        separator: str = " ",
    ):
        if mode not in ("labeled", "unlabeled"):
            raise ConfigError(f"mode must be 'labeled' or 'unlabeled', got {mode!r}")
        self.spec = spec
        self.pattern = pattern
        self.scorer = scorer
        self.pool = pool
        self.mode = mode
        self.renormalize_parts = renormalize_parts
        self.max_prompt_chars = max_prompt_chars
        self.separator = separator
        self._self_cache: dict[str, Label] = {}

    def warm(self, sample_ids: list[str]) -> None:
        """Pre-fill the self-prediction memo (unlabeled mode) for these pool ids.

        Run before handing the predictor to parallel workers: afterwards the
        memo is read-only, so worker threads never duplicate backend calls.
        """
        if self.mode != "unlabeled":
            return
        for sample_id in sample_ids:
            if sample_id not in self._self_cache:
                self._self_cache[sample_id] = self_predict(
                    self.pool.by_id(sample_id),
                    self.pattern,
                    self.spec,
                    self.scorer,
                    max_prompt_chars=self.max_prompt_chars,
                )

    def bor(self, input_sample: Sample, hits: list[RetrievalHit]) -> Prediction:
        return predict_bor(
            input_sample,
            hits,
            self.mode,
            self.spec,
            self.pattern,
            self.scorer,
            self.pool,
            renormalize_parts=self.renormalize_parts,
            self_cache=self._self_cache,
            max_prompt_chars=self.max_prompt_chars,
            separator=self.separator,
        )

    def conc(self, input_sample: Sample, hits: list[RetrievalHit]) -> Prediction:
        return predict_conc(
            input_sample,
            hits,
            self.mode,
            self.spec,
            self.pattern,
            self.scorer,
            self.pool,
            renormalize_parts=self.renormalize_parts,
            self_cache=self._self_cache,
            max_prompt_chars=self.max_prompt_chars,
            separator=self.separator,
        )

    def direct(self, input_sample: Sample) -> Prediction:
        return predict_direct(
            input_sample,
            self.spec,
            self.pattern,
            self.scorer,
            max_prompt_chars=self.max_prompt_chars,
        )
