"""HTTP front end: GET /info, POST /score, POST /embed.

Request handling is serialized per model (each model holds a lock) with a
bounded admission gate: at most QUEUE_LIMIT requests may be in flight or
waiting; beyond that the service answers 503 instead of queueing without
bound. Batches above the configured maximum are refused with 413. Client
mistakes (bad masks, impossible candidates) come back as 400, model failures
as 500 with the failure message.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .models import (
    MASK_POLICY,
    Embedder,
    MaskScorer,
    RequestRejected,
    SidecarConfig,
)

QUEUE_LIMIT = 16


class ScoreRequest(BaseModel):
    prompts: list[str]
    candidates: list[str]


class EmbedRequest(BaseModel):
    texts: list[str]


def create_app(config: SidecarConfig) -> FastAPI:
    """Load both models and return the ready-to-serve application.

    Loading happens here, not at first request, so an unresolvable model id
    fails at startup.
    """
    scorer = MaskScorer(config.mlm, deterministic=config.deterministic)
    embedder = Embedder(config.embedder)

    app = FastAPI(title="parc-sidecar", docs_url=None, redoc_url=None)
    app.state.gate = threading.BoundedSemaphore(QUEUE_LIMIT)

    @contextmanager
    def admitted():
        if not app.state.gate.acquire(blocking=False):
            raise HTTPException(503, "request queue full")
        try:
            yield
        finally:
            app.state.gate.release()

    @app.get("/info")
    def info():
        return {
            "model": scorer.model_id,
            "embedder": embedder.model_id,
            "dim": embedder.dim,
            "max_batch": config.max_batch,
            "deterministic": config.deterministic,
            "mask_policy": MASK_POLICY,
        }

    @app.post("/score")
    def score(request: ScoreRequest):
        if len(request.prompts) > config.max_batch:
            raise HTTPException(
                413,
                f"batch of {len(request.prompts)} prompts exceeds "
                f"max_batch={config.max_batch}",
            )
        with admitted():
            try:
                probs = scorer.score(request.prompts, request.candidates)
            except RequestRejected as exc:
                raise HTTPException(exc.status, exc.message) from exc
            except Exception as exc:
                raise HTTPException(500, f"scoring failed: {exc}") from exc
        return {"probs": probs}

    @app.post("/embed")
    def embed(request: EmbedRequest):
        if len(request.texts) > config.max_batch:
            raise HTTPException(
                413,
                f"batch of {len(request.texts)} texts exceeds "
                f"max_batch={config.max_batch}",
            )
        with admitted():
            try:
                vectors = embedder.embed(request.texts)
            except Exception as exc:
                raise HTTPException(500, f"embedding failed: {exc}") from exc
        return {"vectors": vectors, "dim": embedder.dim}

    return app
