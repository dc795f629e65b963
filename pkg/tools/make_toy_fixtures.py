#!/usr/bin/env python3
"""Regenerate the committed toy dataset under tests/data/toy/.

The toy scorer is a pure hash function: every probability and embedding is
derived from SHA-256 of the request, so the data is reproducible on any
machine without a model. A recording pass captures everything the committed
experiment configs will ask for and freezes it into fixture files; a replay
pass re-runs both configs from the frozen fixtures and checks the results
match the recording run.
"""

from __future__ import annotations

import hashlib
import json
import math
import shutil
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

import parc
from parc import ExperimentConfig, FixtureBackend, ScoreVector, run_experiment
from parc.embeddings import load_tsv, save_index

TOY_DIR = Path(__file__).resolve().parents[1] / "tests" / "data" / "toy"
EMBED_DIM = 16


class HashScorer:
    """Deterministic stand-in backend: SHA-256 in, probabilities out."""

    backend_id = "hash:v1"
    deterministic = True

    @staticmethod
    def _unit(tag: str) -> float:
        digest = hashlib.sha256(tag.encode("utf-8")).digest()
        return (int.from_bytes(digest[:8], "big") + 1) / (2**64 + 2)

    def score(self, prompts, candidates):
        out = []
        for prompt in prompts:
            raw = [self._unit(f"score:{prompt}:{word}") for word in candidates]
            total = math.fsum(raw)
            out.append(ScoreVector(tuple(r / total * 0.8 for r in raw)))
        return out

    def embed(self, texts):
        rows = [
            [self._unit(f"embed:{text}:{i}") * 2.0 - 1.0 for i in range(EMBED_DIM)]
            for text in texts
        ]
        return np.asarray(rows, dtype=np.float32)


class RecordingScorer:
    """Pass-through wrapper that captures every request for fixture freezing."""

    def __init__(self, inner):
        self._inner = inner
        self.backend_id = inner.backend_id
        self.deterministic = inner.deterministic
        self.scores: dict[str, dict[str, float]] = {}
        self.texts: dict[str, list[float]] = {}

    def score(self, prompts, candidates):
        vectors = self._inner.score(prompts, candidates)
        for prompt, vector in zip(prompts, vectors):
            key = hashlib.sha256(prompt.encode("utf-8")).hexdigest()
            self.scores.setdefault(key, {}).update(
                dict(zip(candidates, vector.probs))
            )
        return vectors

    def embed(self, texts):
        matrix = self._inner.embed(texts)
        for text, row in zip(texts, matrix):
            key = hashlib.sha256(text.encode("utf-8")).hexdigest()
            self.texts[key] = [float(v) for v in row]
        return matrix


POOL = [  # English retrieval pool: ids, review text, gold label
    ("en-01", "This blender works perfectly and the motor is quiet.", "pos"),
    ("en-02", "Broke after two days, complete waste of money.", "neg"),
    ("en-03", "Lovely fabric, fits exactly as described.", "pos"),
    ("en-04", "The screen arrived cracked and support never replied.", "neg"),
    ("en-05", "Best headphones I have owned in years.", "pos"),
    ("en-06", "Battery drains within an hour, very disappointing.", "neg"),
    ("en-07", "Sturdy build and simple to assemble.", "pos"),
    ("en-08", "Paint peeled off the first week.", "neg"),
]

TE_TEST = [  # Telugu test inputs
    ("te-01", "ఈ ఉత్పత్తి చాలా బాగుంది, నాణ్యత అద్భుతం.", "pos"),
    ("te-02", "రెండు రోజుల్లోనే పాడైపోయింది, డబ్బు వృథా.", "neg"),
    ("te-03", "ప్యాకింగ్ చక్కగా ఉంది, పనితీరు బాగుంది.", "pos"),
    ("te-04", "బ్యాటరీ అస్సలు నిలవదు, నిరాశ కలిగింది.", "neg"),
    ("te-05", "ధరకు తగిన విలువ, మళ్లీ కొంటాను.", "pos"),
    ("te-06", "స్క్రీన్ పగిలి వచ్చింది, సేవ లేదు.", "neg"),
]

SW_TEST = [  # Swahili test inputs
    ("sw-01", "Bidhaa hii ni nzuri sana, ubora wa hali ya juu.", "pos"),
    ("sw-02", "Iliharibika baada ya siku mbili, hasara tupu.", "neg"),
    ("sw-03", "Inafanya kazi vizuri na ni rahisi kutumia.", "pos"),
    ("sw-04", "Betri haidumu hata saa moja, inasikitisha.", "neg"),
    ("sw-05", "Nimeipenda, nitanunua tena bila shaka.", "pos"),
    ("sw-06", "Skrini ilifika imevunjika, hakuna msaada.", "neg"),
]

# Tiny typological profiles for the langsim CLI tour. Vectors are invented
# but shaped like the real thing: five feature families, nulls for gaps.
PROFILES = [
    {
        "code": "en",
        "wiki_size": 6458670,
        "features": {
            "SYN": [0.0, 1.0, 1.0, 0.0],
            "PHO": [1.0, 0.0, 1.0],
            "INV": [0.8, 0.2, 0.5],
            "FAM": [1.0, 0.0, 0.0],
            "GEO": [0.9, 0.1],
        },
    },
    {
        "code": "de",
        "wiki_size": 2675084,
        "features": {
            "SYN": [0.0, 1.0, 0.0, 0.0],
            "PHO": [1.0, 0.0, 1.0],
            "INV": [0.7, 0.3, 0.5],
            "FAM": [1.0, 0.0, 0.0],
            "GEO": [0.8, 0.2],
        },
    },
    {
        "code": "fi",
        "wiki_size": 528436,
        "features": {
            "SYN": [1.0, 0.0, 0.0, 1.0],
            "PHO": [0.0, 1.0, 0.0],
            "INV": [0.4, 0.6, None],
            "FAM": [0.0, 1.0, 0.0],
            "GEO": [0.7, 0.3],
        },
    },
    {
        "code": "te",
        "wiki_size": 70431,
        "features": {
            "SYN": [1.0, 0.0, 1.0, 1.0],
            "PHO": [0.0, 1.0, 1.0],
            "INV": [0.3, 0.7, 0.6],
            "FAM": [0.0, 0.0, 1.0],
            "GEO": [0.2, 0.8],
        },
    },
    {
        "code": "sw",
        "wiki_size": 59038,
        "features": {
            "SYN": [1.0, 0.0, 0.0, None],
            "PHO": [0.0, 1.0, 1.0],
            "INV": [0.5, 0.5, 0.4],
            "FAM": [0.0, 0.0, 0.0],
            "GEO": [0.1, 0.9],
        },
    },
]

PAIRS = """\
# source target — one pair per line
en te
en sw
en de
en fi
"""

# Balanced corpora for the majority-baseline floors (2-, 4-, and 3-class).
MAJ_AMAZON = [
    ("m-01", "Great value.", "pos"),
    ("m-02", "Terrible quality.", "neg"),
    ("m-03", "Works well.", "pos"),
    ("m-04", "Fell apart.", "neg"),
]
MAJ_AGNEWS = [
    ("g-01", "Summit talks resume between neighboring states.", "World"),
    ("g-02", "Peace accord signed after decade of conflict.", "World"),
    ("g-03", "Champions clinch the title in extra time.", "Sports"),
    ("g-04", "Sprinter breaks national record at trials.", "Sports"),
    ("g-05", "Shares rally as earnings beat forecasts.", "Business"),
    ("g-06", "Central bank holds rates steady again.", "Business"),
    ("g-07", "New chip doubles battery life in phones.", "Tech"),
    ("g-08", "Researchers unveil faster wireless standard.", "Tech"),
]
MAJ_XNLI = [
    ("x-01", ("A man is cooking dinner.", "Food is being prepared."), "entailment"),
    ("x-02", ("A woman reads a book.", "She is studying for exams."), "neutral"),
    ("x-03", ("The dog sleeps on the rug.", "The dog is running outside."), "contradiction"),
    ("x-04", ("Children play in the park.", "Kids are outdoors."), "entailment"),
    ("x-05", ("He bought a red car.", "The car was expensive."), "neutral"),
    ("x-06", ("The store is closed.", "The store is open."), "contradiction"),
]


def write_corpus(path: Path, rows, language: str, arity: int = 1) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            sample_id, text, label = row
            segments = [text] if arity == 1 else list(text)
            fh.write(
                json.dumps(
                    {
                        "id": sample_id,
                        "segments": segments,
                        "language": language,
                        "label": label,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def main() -> None:
    TOY_DIR.mkdir(parents=True, exist_ok=True)

    write_corpus(TOY_DIR / "en_pool.jsonl", POOL, "en")
    write_corpus(TOY_DIR / "te_test.jsonl", TE_TEST, "te")
    write_corpus(TOY_DIR / "sw_test.jsonl", SW_TEST, "sw")
    write_corpus(TOY_DIR / "maj_amazon.jsonl", MAJ_AMAZON, "en")
    write_corpus(TOY_DIR / "maj_agnews.jsonl", MAJ_AGNEWS, "en")
    write_corpus(TOY_DIR / "maj_xnli.jsonl", MAJ_XNLI, "en", arity=2)

    with (TOY_DIR / "profiles.jsonl").open("w", encoding="utf-8") as fh:
        for profile in PROFILES:
            fh.write(json.dumps(profile) + "\n")
    (TOY_DIR / "pairs.txt").write_text(PAIRS, encoding="utf-8")

    for task in ("amazon", "agnews", "xnli"):
        shutil.copy(
            Path(parc.__file__).parent / "tasks" / f"{task}.json",
            TOY_DIR / f"task_{task}.json",
        )

    scorer = HashScorer()
    pool_vectors = scorer.embed([text for _, text, _ in POOL])
    with (TOY_DIR / "pool_embeddings.tsv").open("w", encoding="utf-8") as fh:
        for (sample_id, _, _), row in zip(POOL, pool_vectors):
            fh.write(sample_id + "\t" + ",".join(repr(float(v)) for v in row) + "\n")
    save_index(load_tsv(TOY_DIR / "pool_embeddings.tsv"), TOY_DIR / "pool.idx")

    configs = {
        "config_labeled_bor.json": {
            "task": "task_amazon.json",
            "pool": "en_pool.jsonl",
            "index": "pool.idx",
            "test_corpora": {"te": "te_test.jsonl", "sw": "sw_test.jsonl"},
            "scorer": {
                "type": "fixture",
                "scores": "scores.jsonl",
                "embeddings": "embeddings.jsonl",
            },
            "mode": "labeled",
            "strategy": "bor",
            "k": [1, 3],
            "pattern": 0,
            "seed": 7,
            "workers": 2,
            "methods": ["retrieval", "random", "direct", "maj"],
        },
        "config_unlabeled_conc.json": {
            "task": "task_amazon.json",
            "pool": "en_pool.jsonl",
            "index": "pool.idx",
            "test_corpora": {"te": "te_test.jsonl", "sw": "sw_test.jsonl"},
            "scorer": {
                "type": "fixture",
                "scores": "scores.jsonl",
                "embeddings": "embeddings.jsonl",
            },
            "mode": "unlabeled",
            "strategy": "conc",
            "k": [1, 3],
            "pattern": 1,
            "seed": 7,
            "methods": ["retrieval", "random", "direct", "maj"],
        },
    }
    for name, raw in configs.items():
        (TOY_DIR / name).write_text(
            json.dumps(raw, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )

    # Recording pass: run both configs against the hash scorer, capture all
    # requests, freeze them into the fixture files the configs point at.
    recorder = RecordingScorer(HashScorer())
    recorded = {}
    for name in configs:
        cfg = parc.load_experiment_config(TOY_DIR / name)
        recorded[name] = run_experiment(cfg, scorer=recorder)
    with (TOY_DIR / "scores.jsonl").open("w", encoding="utf-8") as fh:
        for digest in sorted(recorder.scores):
            fh.write(
                json.dumps(
                    {"prompt_sha256": digest, "scores": recorder.scores[digest]},
                    sort_keys=True,
                )
                + "\n"
            )
    with (TOY_DIR / "embeddings.jsonl").open("w", encoding="utf-8") as fh:
        for digest in sorted(recorder.texts):
            fh.write(
                json.dumps({"text_sha256": digest, "vector": recorder.texts[digest]})
                + "\n"
            )
    print(
        f"froze {len(recorder.scores)} scored prompts and "
        f"{len(recorder.texts)} embedded texts"
    )

    # Replay pass: the frozen fixtures must reproduce the recording run.
    for name in configs:
        cfg = parc.load_experiment_config(TOY_DIR / name)
        replayed = run_experiment(cfg)
        assert replayed.report == recorded[name].report, f"{name}: report drifted"
        assert replayed.table.cells == recorded[name].table.cells, f"{name}: cells drifted"
        print(f"\n{name} (replayed from frozen fixtures):")
        print(replayed.report, end="")

    # Frozen files must load cleanly through the public backend.
    FixtureBackend(TOY_DIR / "scores.jsonl", TOY_DIR / "embeddings.jsonl")
    print("\ntoy dataset written to", TOY_DIR)


if __name__ == "__main__":
    main()
