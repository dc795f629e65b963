"""HTTP sidecar that serves masked-token scores and sentence embeddings."""

from .models import (
    DEFAULT_EMBEDDER,
    DEFAULT_MLM,
    MASK_POLICY,
    WIRE_MASK,
    Embedder,
    MaskScorer,
    RequestRejected,
    SidecarConfig,
)
from .service import QUEUE_LIMIT, create_app

__all__ = [
    "DEFAULT_EMBEDDER",
    "DEFAULT_MLM",
    "MASK_POLICY",
    "QUEUE_LIMIT",
    "WIRE_MASK",
    "Embedder",
    "MaskScorer",
    "RequestRejected",
    "SidecarConfig",
    "create_app",
]
