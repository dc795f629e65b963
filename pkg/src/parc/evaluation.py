"""Experiment harness: run a configured evaluation end to end, deterministically.

A run loads a task, a labeled (or pseudo-labelable) retrieval pool with its
embedding index, and one test corpus per target language; classifies every
test input with the configured methods; and writes a results table plus
per-prediction artifacts. Two runs of the same config against the same
backend produce byte-identical outputs: no timestamps, no unordered
iteration, fixed float formatting.

Methods:

* ``retrieval`` — neighbors from the index, combined per the configured
  strategy, at each k.
* ``random`` — same strategies over uniformly sampled neighbors (seeded
  per input and k), the control for "does retrieval matter".
* ``direct`` — the input's own cloze prompt, no neighbors.
* ``maj`` — majority-class floor of the test corpus.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Callable, Iterable, TypeVar

from .corpus import Corpus, load_corpus, load_task
from .embeddings import load_index, normalize
from .errors import ConfigError, DataError
from .fixtures import ReferenceFixture
from .predict import Prediction, Predictor
from .retrieval import random_retrieve, retrieve_top_k
from .scoring import CachingScorer, FixtureBackend, HttpBackend, ScorerBackend

KNOWN_METHODS = ("retrieval", "random", "direct", "maj")
PER_K_METHODS = ("retrieval", "random")

_T = TypeVar("_T")
_R = TypeVar("_R")


def _parallel_map(fn: Callable[[_T], _R], items: Iterable[_T], workers: int) -> list[_R]:
    """Apply fn with bounded parallelism, preserving input order exactly."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def round1(value: float) -> str:
    """Render to one decimal, halves rounding up: 33.35 → '33.4' (never banker's)."""
    return str(Decimal(repr(value)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def accuracy(predictions: list[Prediction], corpus: Corpus) -> float:
    """Percentage of predictions matching gold labels; requires full coverage."""
    if not predictions:
        raise DataError("no predictions to score")
    if not corpus.labeled:
        raise DataError("cannot score against an unlabeled corpus")
    predicted_ids = {p.input_id for p in predictions}
    corpus_ids = {s.id for s in corpus.samples}
    if predicted_ids != corpus_ids:
        missing = sorted(corpus_ids - predicted_ids)[:3]
        extra = sorted(predicted_ids - corpus_ids)[:3]
        raise DataError(
            f"prediction ids do not cover the corpus (missing {missing}, extra {extra})"
        )
    correct = sum(
        1 for p in predictions if p.label == corpus.by_id(p.input_id).gold_label
    )
    return 100.0 * correct / len(corpus)


def majority_baseline(corpus: Corpus) -> float:
    """Accuracy of always predicting the corpus's most frequent label."""
    if not corpus.labeled:
        raise DataError("majority baseline needs a labeled corpus")
    counts: dict[int, int] = {}
    for sample in corpus.samples:
        counts[sample.gold_label.index] = counts.get(sample.gold_label.index, 0) + 1
    best = max(counts.items(), key=lambda item: (item[1], -item[0]))
    return 100.0 * best[1] / len(corpus)


@dataclass(frozen=True)
class ExperimentConfig:
    task: Path
    pool: Path
    index: Path
    test_corpora: dict[str, Path]  # language code → corpus path, row order
    scorer: dict
    mode: str = "labeled"
    strategy: str = "bor"
    k: tuple[int, ...] = (1,)
    pattern: int = 0
    seed: int = 0
    methods: tuple[str, ...] = ("retrieval", "direct", "random", "maj")
    bor_renormalize: bool = True
    max_prompt_chars: int = 4000
    separator: str = " "
    workers: int = 4
    output_dir: Path | None = None
    cache_dir: Path | None = None

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.mode not in ("labeled", "unlabeled"):
            raise ConfigError(f"mode must be 'labeled' or 'unlabeled', got {self.mode!r}")
        if self.strategy not in ("bor", "conc"):
            raise ConfigError(f"strategy must be 'bor' or 'conc', got {self.strategy!r}")
        if not self.k:
            raise ConfigError("k list must be non-empty")
        if any(not isinstance(k, int) or isinstance(k, bool) for k in self.k):
            raise ConfigError(f"k values must be integers, got {self.k}")
        if any(k < 1 for k in self.k):
            raise ConfigError(f"all k must be >= 1, got {self.k}")
        if list(self.k) != sorted(set(self.k)):
            raise ConfigError(f"k list must be strictly ascending, got {self.k}")
        if self.pattern < 0:
            raise ConfigError(f"pattern index must be >= 0, got {self.pattern}")
        if not self.methods:
            raise ConfigError("methods list must be non-empty")
        for method in self.methods:
            if method not in KNOWN_METHODS:
                raise ConfigError(
                    f"unknown method {method!r} (known: {', '.join(KNOWN_METHODS)})"
                )
        if not self.test_corpora:
            raise ConfigError("at least one test corpus is required")


_CONFIG_KEYS = {
    "task", "pool", "index", "test_corpora", "scorer", "mode", "strategy",
    "k", "pattern", "seed", "methods", "bor_renormalize", "max_prompt_chars",
    "separator", "workers", "output_dir", "cache_dir",
}


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    """Parse a JSON experiment config; relative paths resolve next to the file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    base = path.parent

    def resolve(p: object, what: str) -> Path:
        if not isinstance(p, str) or not p:
            raise ConfigError(f"{path}: {what} must be a non-empty path string")
        return (base / p).resolve()

    try:
        task = resolve(raw["task"], "task")
        pool = resolve(raw["pool"], "pool")
        index = resolve(raw["index"], "index")
        test_raw = raw["test_corpora"]
        scorer = raw["scorer"]
    except KeyError as exc:
        raise ConfigError(f"{path}: missing config key {exc}") from exc
    if not isinstance(test_raw, dict):
        raise ConfigError(f"{path}: test_corpora must be an object")
    if not isinstance(scorer, dict):
        raise ConfigError(f"{path}: scorer must be an object")
    test_corpora = {
        str(lang): resolve(p, f"test_corpora[{lang}]") for lang, p in test_raw.items()
    }
    scorer = dict(scorer)
    for key in ("scores", "embeddings"):
        if isinstance(scorer.get(key), str):
            scorer[key] = str(resolve(scorer[key], f"scorer.{key}"))
    kwargs: dict = {}
    for key in ("mode", "strategy", "seed", "pattern", "bor_renormalize",
                "max_prompt_chars", "separator", "workers"):
        if key in raw:
            kwargs[key] = raw[key]
    if "k" in raw:
        if not isinstance(raw["k"], list):
            raise ConfigError(f"{path}: k must be a list of integers")
        kwargs["k"] = tuple(raw["k"])
    if "methods" in raw:
        if not isinstance(raw["methods"], list):
            raise ConfigError(f"{path}: methods must be a list")
        kwargs["methods"] = tuple(raw["methods"])
    if raw.get("output_dir"):
        kwargs["output_dir"] = resolve(raw["output_dir"], "output_dir")
    if raw.get("cache_dir"):
        kwargs["cache_dir"] = resolve(raw["cache_dir"], "cache_dir")
    return ExperimentConfig(
        task=task, pool=pool, index=index, test_corpora=test_corpora,
        scorer=scorer, **kwargs,
    )


def build_scorer(description: dict, cache_dir: Path | None = None) -> ScorerBackend:
    """Construct a backend from its config description, optionally cached.

    ``{"type": "fixture", "scores": ..., "embeddings": ...}`` or
    ``{"type": "http", "base_url": ...}``. A cache directory (argument or
    PARC_CACHE_DIR) wraps the backend in a write-through score cache.
    """
    kind = description.get("type")
    if kind == "fixture":
        if "scores" not in description:
            raise ConfigError("fixture scorer needs a 'scores' path")
        backend: ScorerBackend = FixtureBackend(
            description["scores"], description.get("embeddings")
        )
    elif kind == "http":
        if "base_url" not in description:
            raise ConfigError("http scorer needs a 'base_url'")
        backend = HttpBackend(
            description["base_url"],
            max_batch=int(description.get("max_batch", 32)),
            retries=int(description.get("retries", 2)),
            timeout=float(description.get("timeout", 30.0)),
        )
    else:
        raise ConfigError(f"scorer type must be 'fixture' or 'http', got {kind!r}")
    if cache_dir is None and os.environ.get("PARC_CACHE_DIR"):
        cache_dir = Path(os.environ["PARC_CACHE_DIR"])
    if cache_dir is not None:
        return CachingScorer(backend, Path(cache_dir) / "scores.jsonl")
    return backend


@dataclass(frozen=True)
class ResultTable:
    """Accuracy per (language, method, k) with an average row over targets.

    The average excludes any test corpus in the pool's own language: transfer
    quality is about the other languages, and a same-language test set would
    dilute it.
    """

    languages: tuple[str, ...]
    columns: tuple[tuple[str, int], ...]  # (method, k); k=0 when not applicable
    cells: dict = field(default_factory=dict)  # (language, method, k) → float
    hrl_language: str = ""

    def cell(self, language: str, method: str, k: int = 0) -> float:
        try:
            return self.cells[(language, method, k)]
        except KeyError:
            raise DataError(f"no result cell for {(language, method, k)}") from None

    def average(self, method: str, k: int = 0) -> float:
        rows = [
            self.cells[(lang, method, k)]
            for lang in self.languages
            if lang != self.hrl_language
        ]
        if not rows:
            raise DataError("no target-language rows to average")
        return sum(rows) / len(rows)

    @staticmethod
    def _label(method: str, k: int) -> str:
        return f"{method}@{k}" if k else method

    def render(self) -> str:
        headers = ["language"] + [self._label(m, k) for m, k in self.columns]
        rows = []
        for lang in self.languages:
            rows.append(
                [lang] + [round1(self.cells[(lang, m, k)]) for m, k in self.columns]
            )
        rows.append(["Avg"] + [round1(self.average(m, k)) for m, k in self.columns])
        widths = [
            max(len(headers[i]), *(len(row[i]) for row in rows))
            for i in range(len(headers))
        ]
        lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip()]
        for row in rows:
            lines.append(
                "  ".join(v.ljust(widths[i]) for i, v in enumerate(row)).rstrip()
            )
        return "\n".join(lines) + "\n"


def render_overview(fixture: ReferenceFixture) -> str:
    """Render the bundled headline table in its reference layout."""
    columns = ["method", "amazon", "agnews", "xnli", "avg"]
    rows = []
    for row in fixture.rows:
        rows.append(
            [str(row["method"])]
            + [round1(float(row[col])) for col in columns[1:]]
        )
    widths = [
        max(len(columns[i]), *(len(row[i]) for row in rows))
        for i in range(len(columns))
    ]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(columns)).rstrip()]
    for row in rows:
        lines.append("  ".join(v.ljust(widths[i]) for i, v in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"


def _random_sub_seed(seed: int, query_id: str, k: int) -> int:
    """Stable per-(input, k) seed so random neighbors never depend on run order."""
    digest = hashlib.sha256(f"{seed}:{query_id}:{k}".encode("utf-8")).hexdigest()
    return int(digest[:16], 16)


@dataclass(frozen=True)
class ExperimentResult:
    table: ResultTable
    predictions: tuple[dict, ...]  # serialized rows, already sorted
    hits: tuple[dict, ...]
    report: str
    results_json: str


def run_experiment(cfg: ExperimentConfig, scorer: ScorerBackend | None = None) -> ExperimentResult:
    """Run one configured evaluation; optionally inject a pre-built scorer."""
    spec = load_task(cfg.task)
    if cfg.pattern >= len(spec.patterns):
        raise ConfigError(
            f"pattern index {cfg.pattern} out of range, task has {len(spec.patterns)}"
        )
    pattern = spec.patterns[cfg.pattern]
    pool = load_corpus(cfg.pool, spec)
    pool_languages = {s.language for s in pool.samples}
    if len(pool_languages) != 1:
        raise DataError(f"pool must be a single language, found {sorted(pool_languages)}")
    hrl_language = next(iter(pool_languages))
    if cfg.mode == "labeled" and not pool.labeled:
        raise DataError("labeled mode requires a fully labeled pool")
    index = load_index(cfg.index)
    pool_ids = {s.id for s in pool.samples}
    stray = [i for i in index.ids if i not in pool_ids]
    if stray:
        raise DataError(f"index ids not present in pool: {stray[:3]}")
    needs_scores = any(m != "maj" for m in cfg.methods)
    needs_retrieval = any(m in PER_K_METHODS for m in cfg.methods)
    if scorer is None and needs_scores:
        scorer = build_scorer(cfg.scorer, cfg.cache_dir)
    max_k = min(max(cfg.k), len(index))
    predictor = combine = None
    if needs_scores:
        predictor = Predictor(
            spec, pattern, scorer, pool, cfg.mode,
            renormalize_parts=cfg.bor_renormalize,
            max_prompt_chars=cfg.max_prompt_chars,
            separator=cfg.separator,
        )
        combine = predictor.bor if cfg.strategy == "bor" else predictor.conc

    languages = tuple(cfg.test_corpora)
    cells: dict[tuple[str, str, int], float] = {}
    prediction_rows: list[dict] = []
    hit_rows: list[dict] = []
    for language, corpus_path in cfg.test_corpora.items():
        corpus = load_corpus(corpus_path, spec)
        mislabeled = [s.id for s in corpus.samples if s.language != language]
        if mislabeled:
            raise DataError(
                f"{corpus_path}: samples not in language {language!r}: {mislabeled[:3]}"
            )
        if not corpus.labeled:
            raise DataError(f"{corpus_path}: test corpora must be labeled to score")

        queries: dict[str, object] = {}
        if needs_retrieval:
            texts = [s.text for s in corpus.samples]
            matrix = scorer.embed(texts)
            if matrix.shape[0] != len(corpus):
                raise DataError(
                    f"embedding backend returned {matrix.shape[0]} rows "
                    f"for {len(corpus)} inputs"
                )
            queries = {
                s.id: normalize(matrix[i]) for i, s in enumerate(corpus.samples)
            }

        retrieved: dict[str, list] = {}
        if "retrieval" in cfg.methods:
            for sample in corpus.samples:
                hits = retrieve_top_k(index, queries[sample.id], max_k)
                retrieved[sample.id] = hits
                hit_rows.append(
                    {
                        "language": language,
                        "method": "retrieval",
                        "k": max_k,
                        "query_id": sample.id,
                        "hits": [
                            {"id": h.sample_id, "sim": h.similarity, "rank": h.rank}
                            for h in hits
                        ],
                    }
                )

        for method in cfg.methods:
            if method == "maj":
                cells[(language, "maj", 0)] = majority_baseline(corpus)
                continue
            if method == "direct":
                preds = _parallel_map(predictor.direct, corpus.samples, cfg.workers)
                cells[(language, "direct", 0)] = accuracy(preds, corpus)
                for p in preds:
                    prediction_rows.append(_prediction_row(language, "direct", 0, p, spec))
                continue
            for k in cfg.k:
                eff_k = min(k, len(index))
                # Neighbor selection is serial (seeded draws, hit logging);
                # the scoring fan-out below is where the time goes.
                jobs = []
                for sample in corpus.samples:
                    if method == "retrieval":
                        hits = retrieved[sample.id][:eff_k]
                    else:
                        hits = random_retrieve(
                            index,
                            eff_k,
                            _random_sub_seed(cfg.seed, sample.id, k),
                            queries[sample.id],
                        )
                        hit_rows.append(
                            {
                                "language": language,
                                "method": "random",
                                "k": k,
                                "query_id": sample.id,
                                "hits": [
                                    {"id": h.sample_id, "sim": h.similarity, "rank": h.rank}
                                    for h in hits
                                ],
                            }
                        )
                    jobs.append((sample, hits))
                predictor.warm(
                    sorted({h.sample_id for _, job_hits in jobs for h in job_hits})
                )
                preds = _parallel_map(
                    lambda job: combine(job[0], job[1]), jobs, cfg.workers
                )
                cells[(language, method, k)] = accuracy(preds, corpus)
                for p in preds:
                    prediction_rows.append(_prediction_row(language, method, k, p, spec))

    columns: list[tuple[str, int]] = []
    for method in cfg.methods:
        if method in PER_K_METHODS:
            columns.extend((method, k) for k in cfg.k)
        else:
            columns.append((method, 0))
    table = ResultTable(
        languages=languages,
        columns=tuple(columns),
        cells=cells,
        hrl_language=hrl_language,
    )
    prediction_rows.sort(key=lambda r: (r["language"], r["method"], r["k"], r["input_id"]))
    hit_rows.sort(key=lambda r: (r["language"], r["method"], r["k"], r["query_id"]))

    results = {
        "mode": cfg.mode,
        "strategy": cfg.strategy,
        "seed": cfg.seed,
        "pattern": cfg.pattern,
        "task": spec.task_id,
        "pool_language": hrl_language,
        "scorer": scorer.backend_id if needs_scores else None,
        "cells": [
            {"language": lang, "method": m, "k": k, "accuracy": v}
            for (lang, m, k), v in sorted(cells.items())
        ],
        "avg": [
            {"method": m, "k": k, "accuracy": table.average(m, k)}
            for m, k in columns
        ],
    }
    result = ExperimentResult(
        table=table,
        predictions=tuple(prediction_rows),
        hits=tuple(hit_rows),
        report=table.render(),
        results_json=json.dumps(results, sort_keys=True, indent=2) + "\n",
    )
    if cfg.output_dir is not None:
        _persist(cfg.output_dir, result)
    return result


def _prediction_row(language: str, method: str, k: int, p: Prediction, spec) -> dict:
    return {
        "language": language,
        "method": method,
        "k": k,
        "input_id": p.input_id,
        "label": p.label.name,
        "scores": list(p.per_label_score),
        "mode": p.mode,
        "strategy": p.strategy,
        "context_ids": list(p.context_ids),
    }


def _persist(output_dir: Path, result: ExperimentResult) -> None:
    output_dir.mkdir(parents=True, exist_ok=True)
    with (output_dir / "predictions.jsonl").open("w", encoding="utf-8") as fh:
        for row in result.predictions:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    with (output_dir / "hits.jsonl").open("w", encoding="utf-8") as fh:
        for row in result.hits:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    (output_dir / "report.txt").write_text(result.report, encoding="utf-8")
    (output_dir / "results.json").write_text(result.results_json, encoding="utf-8")
