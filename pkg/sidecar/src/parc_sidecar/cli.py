"""Command-line launcher for the sidecar service."""

from __future__ import annotations

import argparse

import uvicorn

from .models import DEFAULT_EMBEDDER, DEFAULT_MLM, SidecarConfig
from .service import create_app


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parc-sidecar",
        description="serve /info, /score, /embed over real multilingual models",
    )
    parser.add_argument("--embedder", default=DEFAULT_EMBEDDER,
                        help="sentence embedding model id or path")
    parser.add_argument("--mlm", default=DEFAULT_MLM,
                        help="masked language model id or path")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8301)
    parser.add_argument("--max-batch", type=int, default=32)
    parser.add_argument("--nondeterministic", dest="deterministic",
                        action="store_false", default=True,
                        help="advertise deterministic: false in /info")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = SidecarConfig(
            embedder=args.embedder,
            mlm=args.mlm,
            port=args.port,
            max_batch=args.max_batch,
            deterministic=args.deterministic,
        )
    except ValueError as exc:
        parser.error(str(exc))
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=config.port, log_level="info")
    return 0
