"""Command-line interface.

Verbs: ``index`` (TSV → binary index), ``retrieve`` (nearest neighbors per
query), ``predict`` (classify a corpus), ``eval`` (run a configured
experiment), ``langsim`` (language similarity table), ``correlate``
(recompute reference correlations), ``report`` (render bundled or saved
results). Exit codes: 0 success, 2 config error, 3 data error, 4 backend
error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .corpus import load_corpus, load_task
from .embeddings import MAGIC, load_index, load_tsv, normalize, save_index
from .errors import ConfigError, ParcError
from .evaluation import load_experiment_config, round1, run_experiment, render_overview
from .fixtures import load_fixture
from .langsim import batch_similarity, impute_missing, load_profiles
from .predict import Predictor
from .retrieval import retrieve_top_k
from .scoring import FixtureBackend


def _open_out(path: str | None):
    return open(path, "w", encoding="utf-8") if path else sys.stdout


def _load_any_index(path: str):
    """Accept either the binary index format or an embedding TSV."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"index file not found: {p}")
    with p.open("rb") as fh:
        head = fh.read(len(MAGIC))
    return load_index(p) if head == MAGIC else load_tsv(p)


def cmd_index(args) -> int:
    index = load_tsv(args.tsv)
    save_index(index, args.out)
    print(f"indexed {len(index)} vectors of dim {index.dim} -> {args.out}")
    return 0


def cmd_retrieve(args) -> int:
    index = _load_any_index(args.index)
    queries = load_tsv(args.queries)
    out = _open_out(args.out)
    try:
        for i, query_id in enumerate(queries.ids):
            hits = retrieve_top_k(index, queries.vectors[i], args.k)
            out.write(
                json.dumps(
                    {
                        "query_id": query_id,
                        "hits": [
                            {"id": h.sample_id, "sim": h.similarity, "rank": h.rank}
                            for h in hits
                        ],
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_predict(args) -> int:
    spec = load_task(args.task)
    if not (0 <= args.pattern < len(spec.patterns)):
        raise ConfigError(
            f"pattern index {args.pattern} out of range, task has {len(spec.patterns)}"
        )
    corpus = load_corpus(args.inputs, spec)
    pool = load_corpus(args.pool, spec)
    backend = FixtureBackend(args.scores, args.embeddings)
    predictor = Predictor(
        spec, spec.patterns[args.pattern], backend, pool, args.mode
    )
    if args.strategy == "direct":
        predictions = [predictor.direct(s) for s in corpus.samples]
    else:
        if not args.index:
            raise ConfigError(f"strategy {args.strategy!r} needs --index")
        if not args.embeddings:
            raise ConfigError(f"strategy {args.strategy!r} needs --embeddings")
        index = _load_any_index(args.index)
        matrix = backend.embed([s.text for s in corpus.samples])
        combine = predictor.bor if args.strategy == "bor" else predictor.conc
        predictions = []
        jobs = []
        for i, sample in enumerate(corpus.samples):
            hits = retrieve_top_k(index, normalize(matrix[i]), args.k)
            jobs.append((sample, hits))
        predictor.warm(sorted({h.sample_id for _, hits in jobs for h in hits}))
        predictions = [combine(sample, hits) for sample, hits in jobs]
    out = _open_out(args.out)
    try:
        for p in predictions:
            out.write(
                json.dumps(
                    {
                        "input_id": p.input_id,
                        "label": p.label.name,
                        "scores": list(p.per_label_score),
                        "context_ids": list(p.context_ids),
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_eval(args) -> int:
    cfg = load_experiment_config(args.config)
    if args.output_dir:
        cfg = dataclasses.replace(cfg, output_dir=Path(args.output_dir).resolve())
    result = run_experiment(cfg)
    print(result.report, end="")
    return 0


def cmd_langsim(args) -> int:
    profiles = load_profiles(args.profiles)
    profiles = impute_missing(profiles, args.impute_k)
    by_code = {p.code: p for p in profiles}
    pairs = []
    pairs_path = Path(args.pairs)
    if not pairs_path.is_file():
        raise ConfigError(f"pairs file not found: {pairs_path}")
    for lineno, line in enumerate(pairs_path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigError(
                f"{pairs_path}:{lineno}: expected 'source target', got {line!r}"
            )
        for code in parts:
            if code not in by_code:
                raise ConfigError(
                    f"{pairs_path}:{lineno}: language {code!r} not in profiles"
                )
        pairs.append((by_code[parts[0]], by_code[parts[1]]))
    reports = batch_similarity(pairs)
    headers = ["pair", "SYN", "PHO", "INV", "FAM", "GEO", "SIM", "WikiSize"]
    rows = []
    for (a, b), report in zip(pairs, reports):
        rows.append(
            [f"{a.code}-{b.code}"]
            + [round1(report.per_feature[f]) for f in ("SYN", "PHO", "INV", "FAM", "GEO")]
            + [round1(report.aggregate), str(b.wiki_size)]
        )
    widths = [
        max(len(headers[i]), *(len(r[i]) for r in rows)) for i in range(len(headers))
    ]
    print("  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip())
    for row in rows:
        print("  ".join(v.ljust(widths[i]) for i, v in enumerate(row)).rstrip())
    return 0


def cmd_correlate(args) -> int:
    from .correlation import reproduce_reference_correlations

    rows = None
    if args.fixture != "fifty_pairs":
        rows = [dict(r) for r in load_fixture(args.fixture).rows]
    study = reproduce_reference_correlations(rows, tolerance=args.tolerance)
    for cell in study.cells:
        status = "ok" if cell.ok else "MISMATCH"
        print(
            f"{cell.setting:10s} {cell.method:9s} {cell.predictor:12s} "
            f"coeff {cell.coefficient:+.4f} (ref {cell.reference_coefficient:+.4f}) "
            f"p {cell.p_value:.4g} "
            f"{'significant' if cell.significant else 'not-significant':16s} {status}"
        )
    if study.ok:
        print(f"all {len(study.cells)} cells within ±{study.tolerance} with matching flags")
        return 0
    bad = sum(1 for c in study.cells if not c.ok)
    print(f"{bad} of {len(study.cells)} cells disagree with the reference")
    return 1


def _render_generic(rows: list[dict]) -> str:
    columns = list(rows[0])
    table = [
        [
            round1(row[c]) if isinstance(row[c], float) else str(row[c])
            for c in columns
        ]
        for row in rows
    ]
    widths = [
        max(len(columns[i]), *(len(r[i]) for r in table)) for i in range(len(columns))
    ]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(columns)).rstrip()]
    for row in table:
        lines.append("  ".join(v.ljust(widths[i]) for i, v in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"


def cmd_report(args) -> int:
    if args.fixture:
        fixture = load_fixture(args.fixture)
        if fixture.name == "overview":
            print(render_overview(fixture), end="")
        else:
            print(_render_generic([dict(r) for r in fixture.rows]), end="")
        return 0
    path = Path(args.results)
    if not path.is_file():
        raise ConfigError(f"results file not found: {path}")
    data = json.loads(path.read_text(encoding="utf-8"))
    cells = {
        (row["language"], row["method"], row["k"]): row["accuracy"]
        for row in data["cells"]
    }
    languages = sorted({lang for lang, _, _ in cells})
    columns = [(row["method"], row["k"]) for row in data["avg"]]
    headers = ["language"] + [f"{m}@{k}" if k else m for m, k in columns]
    table = []
    for lang in languages:
        table.append([lang] + [round1(cells[(lang, m, k)]) for m, k in columns])
    table.append(["Avg"] + [round1(row["accuracy"]) for row in data["avg"]])
    widths = [
        max(len(headers[i]), *(len(r[i]) for r in table)) for i in range(len(headers))
    ]
    print("  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip())
    for row in table:
        print("  ".join(v.ljust(widths[i]) for i, v in enumerate(row)).rstrip())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parc",
        description="Cross-lingual retrieval-augmented cloze classification toolkit",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("index", help="build a binary embedding index from a TSV")
    p.add_argument("--tsv", required=True, help="input: id<TAB>v1,v2,... per line")
    p.add_argument("--out", required=True, help="output index path")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("retrieve", help="nearest neighbors for each query vector")
    p.add_argument("--index", required=True, help="binary index or embedding TSV")
    p.add_argument("--queries", required=True, help="query TSV: id<TAB>v1,v2,...")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--out", help="write JSON lines here instead of stdout")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("predict", help="classify a corpus with fixture scores")
    p.add_argument("--task", required=True)
    p.add_argument("--inputs", required=True, help="corpus to classify")
    p.add_argument("--pool", required=True, help="retrieval pool corpus")
    p.add_argument("--scores", required=True, help="score fixture (JSON lines)")
    p.add_argument("--embeddings", help="embedding fixture (JSON lines)")
    p.add_argument("--index", help="binary index or embedding TSV over the pool")
    p.add_argument("--mode", choices=["labeled", "unlabeled"], default="labeled")
    p.add_argument("--strategy", choices=["bor", "conc", "direct"], default="bor")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--pattern", type=int, default=0)
    p.add_argument("--out", help="write JSON lines here instead of stdout")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="run a configured experiment end to end")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--output-dir", help="override the config's output directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("langsim", help="similarity table for language pairs")
    p.add_argument("--profiles", required=True, help="language profiles (JSON lines)")
    p.add_argument("--pairs", required=True, help="file of 'source target' lines")
    p.add_argument("--impute-k", type=int, default=10)
    p.set_defaults(func=cmd_langsim)

    p = sub.add_parser("correlate", help="recompute the reference correlations")
    p.add_argument(
        "--fixture",
        default="fifty_pairs",
        help="bundled fixture name or path to a fixture-format file",
    )
    p.add_argument("--tolerance", type=float, default=0.03)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("report", help="render bundled tables or saved results")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--fixture", help="bundled fixture name")
    group.add_argument("--results", help="path to a results.json from `parc eval`")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
