"""Domain types for tasks, samples, and corpora.

A task is described by cloze pattern templates plus a bijective label → word
mapping (the verbalizer). Templates use the literal placeholders ``[X]``
(single-segment tasks), ``[X1]``/``[X2]`` (segment pairs), and ``[MASK]``.

All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

from .errors import ConfigError, DataError

MASK = "[MASK]"

_TOKEN_RE = re.compile(r"\[(?:MASK|X|X1|X2)\]")
_PLACEHOLDERS_BY_ARITY = {1: ("[X]",), 2: ("[X1]", "[X2]")}


@dataclass(frozen=True)
class Label:
    """A class label: a stable index and a human-readable name."""

    index: int
    name: str


@dataclass(frozen=True)
class PatternTemplate:
    """A cloze template with exactly one mask and the placeholders of one arity.

    The template is parsed once into alternating literal/token parts, so
    rendering is a single pass and segment text is never re-scanned for
    placeholders.
    """

    template: str
    parts: tuple[str, ...] = field(init=False, compare=False, repr=False)
    arity: int = field(init=False, compare=False)

    def __post_init__(self) -> None:
        parts: list[str] = []
        pos = 0
        for m in _TOKEN_RE.finditer(self.template):
            if m.start() > pos:
                parts.append(self.template[pos : m.start()])
            parts.append(m.group())
            pos = m.end()
        if pos < len(self.template):
            parts.append(self.template[pos:])

        tokens = [p for p in parts if _TOKEN_RE.fullmatch(p)]
        if tokens.count(MASK) != 1:
            raise ConfigError(
                f"pattern {self.template!r} must contain exactly one {MASK}, "
                f"found {tokens.count(MASK)}"
            )
        placeholders = tuple(sorted(t for t in tokens if t != MASK))
        if placeholders == ("[X]",):
            arity = 1
        elif placeholders == ("[X1]", "[X2]"):
            arity = 2
        else:
            raise ConfigError(
                f"pattern {self.template!r} must use either [X] once or both "
                f"[X1] and [X2] once, found {placeholders or 'no placeholders'}"
            )
        object.__setattr__(self, "parts", tuple(parts))
        object.__setattr__(self, "arity", arity)

    def render(self, substitutions: dict[str, str]) -> str:
        """Join the literal parts, replacing each token via `substitutions`."""
        return "".join(substitutions.get(p, p) for p in self.parts)


@dataclass(frozen=True)
class TaskSpec:
    """One classification task: patterns plus the label ↔ word bijection.

    `labels` is ordered by index; `verbalizer_words[i]` is the word for
    `labels[i]`.
    """

    task_id: str
    arity: int
    patterns: tuple[PatternTemplate, ...]
    labels: tuple[Label, ...]
    verbalizer_words: tuple[str, ...]

    def verbalize(self, label: Label) -> str:
        if not (0 <= label.index < len(self.labels)) or self.labels[label.index] != label:
            raise DataError(f"label {label!r} is not part of task {self.task_id!r}")
        return self.verbalizer_words[label.index]

    def label_named(self, name: str) -> Label:
        for label in self.labels:
            if label.name == name:
                return label
        raise DataError(f"unknown label name {name!r} for task {self.task_id!r}")


def validate_task(spec: TaskSpec) -> None:
    """Check every TaskSpec invariant; raise ConfigError on the first violation."""
    if not spec.task_id:
        raise ConfigError("task_id must be non-empty")
    if spec.arity not in (1, 2):
        raise ConfigError(f"arity must be 1 or 2, got {spec.arity}")
    if not spec.patterns:
        raise ConfigError(f"task {spec.task_id!r} must define at least one pattern")
    for pattern in spec.patterns:
        if pattern.arity != spec.arity:
            raise ConfigError(
                f"pattern {pattern.template!r} has arity {pattern.arity}, "
                f"task {spec.task_id!r} declares {spec.arity}"
            )
    if len(spec.labels) < 2:
        raise ConfigError(f"task {spec.task_id!r} needs at least two labels")
    for i, label in enumerate(spec.labels):
        if label.index != i:
            raise ConfigError(
                f"label indices must be contiguous from 0: position {i} holds {label!r}"
            )
    names = [label.name for label in spec.labels]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate label names in task {spec.task_id!r}: {names}")
    if len(spec.verbalizer_words) != len(spec.labels):
        raise ConfigError(
            f"task {spec.task_id!r} has {len(spec.labels)} labels but "
            f"{len(spec.verbalizer_words)} verbalizer words"
        )
    if any(not word for word in spec.verbalizer_words):
        raise ConfigError(f"task {spec.task_id!r} has an empty verbalizer word")
    if len(set(spec.verbalizer_words)) != len(spec.verbalizer_words):
        raise ConfigError(
            f"verbalizer must be a bijection, duplicate word in {spec.verbalizer_words}"
        )


def load_task(path: str | Path) -> TaskSpec:
    """Load and validate a task file.

    Format: JSON object with `task_id`, `arity`, `patterns` (template strings),
    and `verbalizer` (object mapping label name → word; key order defines the
    label indices).
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"task file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    try:
        task_id = raw["task_id"]
        arity = raw["arity"]
        pattern_strings = raw["patterns"]
        verbalizer = raw["verbalizer"]
    except KeyError as exc:
        raise ConfigError(f"{path}: missing task field {exc}") from exc
    if not isinstance(pattern_strings, list) or not all(
        isinstance(p, str) for p in pattern_strings
    ):
        raise ConfigError(f"{path}: patterns must be a list of strings")
    if not isinstance(verbalizer, dict):
        raise ConfigError(f"{path}: verbalizer must be an object")
    spec = TaskSpec(
        task_id=str(task_id),
        arity=arity if isinstance(arity, int) else -1,
        patterns=tuple(PatternTemplate(p) for p in pattern_strings),
        labels=tuple(Label(i, str(name)) for i, name in enumerate(verbalizer)),
        verbalizer_words=tuple(str(w) for w in verbalizer.values()),
    )
    validate_task(spec)
    return spec


@dataclass(frozen=True)
class Sample:
    """One corpus item: 1–2 text segments, a language code, optional gold label."""

    id: str
    segments: tuple[str, ...]
    language: str
    gold_label: Label | None = None

    @property
    def text(self) -> str:
        """Segments joined with a single space (the retrieval query text)."""
        return " ".join(self.segments)


@dataclass(frozen=True)
class Corpus:
    """An ordered, immutable collection of samples for one task.

    Sample order is load order and defines tie-breaking downstream.
    """

    task_id: str
    samples: tuple[Sample, ...]
    labeled: bool

    def __len__(self) -> int:
        return len(self.samples)

    @cached_property
    def _by_id(self) -> dict[str, Sample]:
        return {s.id: s for s in self.samples}

    def by_id(self, sample_id: str) -> Sample:
        try:
            return self._by_id[sample_id]
        except KeyError:
            raise DataError(f"unknown sample id {sample_id!r}") from None


def load_corpus(path: str | Path, task: TaskSpec) -> Corpus:
    """Load a JSON-lines corpus file against a task.

    Each line is an object with `id`, `segments` (list of strings),
    `language`, and optionally `label` (a label name from the task).
    The corpus is labeled iff every record carries a label.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"corpus file not found: {path}")
    samples: list[Sample] = []
    seen_ids: set[str] = set()
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise DataError(f"{path}:{lineno}: expected a JSON object")
        try:
            sample_id = record["id"]
            segments = record["segments"]
            language = record["language"]
        except KeyError as exc:
            raise DataError(f"{path}:{lineno}: missing field {exc}") from exc
        if not isinstance(sample_id, str) or not sample_id:
            raise DataError(f"{path}:{lineno}: id must be a non-empty string")
        if (
            not isinstance(segments, list)
            or not segments
            or not all(isinstance(s, str) for s in segments)
        ):
            raise DataError(f"{path}:{lineno}: segments must be a non-empty list of strings")
        if len(segments) != task.arity:
            raise DataError(
                f"{path}:{lineno}: sample {sample_id!r} has {len(segments)} segments, "
                f"task {task.task_id!r} expects {task.arity}"
            )
        if not isinstance(language, str) or not language:
            raise DataError(f"{path}:{lineno}: language must be a non-empty string")
        if sample_id in seen_ids:
            raise DataError(f"{path}:{lineno}: duplicate sample id {sample_id!r}")
        seen_ids.add(sample_id)
        gold = None
        if "label" in record and record["label"] is not None:
            label_name = record["label"]
            if not isinstance(label_name, str):
                raise DataError(f"{path}:{lineno}: label must be a string")
            try:
                gold = task.label_named(label_name)
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
        samples.append(Sample(sample_id, tuple(segments), language, gold))
    labeled = bool(samples) and all(s.gold_label is not None for s in samples)
    return Corpus(task_id=task.task_id, samples=tuple(samples), labeled=labeled)


def dump_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus back to disk in the canonical line format."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for sample in corpus.samples:
            record: dict[str, object] = {
                "id": sample.id,
                "segments": list(sample.segments),
                "language": sample.language,
            }
            if sample.gold_label is not None:
                record["label"] = sample.gold_label.name
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
