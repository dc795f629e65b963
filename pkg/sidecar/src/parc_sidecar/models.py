"""Model plumbing: a masked-token scorer and a sentence embedder.

Both wrap real pretrained checkpoints through the transformers Auto classes,
so a model id can be anything ``from_pretrained`` resolves — a hub name or a
local directory. Each model is loaded once and its forward pass is
serialized behind a lock; the HTTP layer on top bounds how many requests may
wait for that lock.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import torch
from transformers import AutoModel, AutoModelForMaskedLM, AutoTokenizer

# The mask placeholder used on the wire, regardless of what the underlying
# tokenizer calls its mask token.
WIRE_MASK = "[MASK]"

# A multi-subtoken candidate is scored by its first subtoken only. The
# policy is advertised in /info so clients can account for it.
MASK_POLICY = "first-subtoken"

DEFAULT_EMBEDDER = "sentence-transformers/paraphrase-multilingual-mpnet-base-v2"
DEFAULT_MLM = "bert-base-multilingual-cased"


class RequestRejected(ValueError):
    """A request the client must fix; carries the HTTP status to return."""

    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


@dataclass(frozen=True)
class SidecarConfig:
    """Startup configuration; model ids are resolved when the app is built."""

    embedder: str = DEFAULT_EMBEDDER
    mlm: str = DEFAULT_MLM
    port: int = 8301
    max_batch: int = 32
    deterministic: bool = True

    def __post_init__(self):
        if self.max_batch < 1:
            raise ValueError(f"max_batch must be >= 1, got {self.max_batch}")
        if not 0 <= self.port <= 65535:
            raise ValueError(f"port must be in [0, 65535], got {self.port}")


class MaskScorer:
    """Scores verbalizer candidates at the single open mask of each prompt."""

    def __init__(self, model_id: str, deterministic: bool = True):
        if deterministic:
            torch.manual_seed(0)
        self.model_id = model_id
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = AutoModelForMaskedLM.from_pretrained(model_id)
        self.model.eval()
        self._lock = threading.Lock()

    def _candidate_ids(self, candidates: list[str]) -> list[int]:
        ids = []
        for word in candidates:
            pieces = self.tokenizer.encode(word, add_special_tokens=False)
            if not pieces:
                raise RequestRejected(
                    400, f"candidate {word!r} tokenizes to no subtokens"
                )
            ids.append(pieces[0])
        return ids

    def score(self, prompts: list[str], candidates: list[str]) -> list[list[float]]:
        """One probability row per prompt, aligned with the candidate order.

        Each prompt must contain exactly one WIRE_MASK placeholder; it is
        swapped for the model's own mask token before tokenization. The row
        entries are the masked-position softmax probabilities of each
        candidate's first subtoken.
        """
        candidate_ids = self._candidate_ids(candidates)
        texts = []
        for prompt in prompts:
            count = prompt.count(WIRE_MASK)
            if count != 1:
                raise RequestRejected(
                    400,
                    f"prompt must contain exactly one {WIRE_MASK}, got {count}: "
                    f"{prompt[:80]!r}",
                )
            texts.append(prompt.replace(WIRE_MASK, self.tokenizer.mask_token))
        if not texts:
            return []

        with self._lock, torch.no_grad():
            encoded = self.tokenizer(
                texts, return_tensors="pt", padding=True, truncation=True
            )
            logits = self.model(**encoded).logits

        mask_id = self.tokenizer.mask_token_id
        rows = []
        for i in range(len(texts)):
            positions = (encoded["input_ids"][i] == mask_id).nonzero().flatten()
            if len(positions) != 1:
                # The mask survived the wire check but not tokenization —
                # in practice this means truncation dropped it.
                raise RequestRejected(
                    400,
                    "mask fell outside the model's maximum input length: "
                    f"{prompts[i][:80]!r}",
                )
            distribution = torch.softmax(logits[i, positions[0]], dim=-1)
            rows.append([float(distribution[cid]) for cid in candidate_ids])
        return rows


class Embedder:
    """Mean-pooled, L2-normalized sentence embeddings."""

    def __init__(self, model_id: str):
        self.model_id = model_id
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = AutoModel.from_pretrained(model_id)
        self.model.eval()
        self.dim = int(self.model.config.hidden_size)
        self._lock = threading.Lock()

    def embed(self, texts: list[str]) -> list[list[float]]:
        if not texts:
            return []
        with self._lock, torch.no_grad():
            encoded = self.tokenizer(
                texts, return_tensors="pt", padding=True, truncation=True
            )
            hidden = self.model(**encoded).last_hidden_state
        # Average only over real tokens, then project to the unit sphere.
        mask = encoded["attention_mask"].unsqueeze(-1).to(hidden.dtype)
        pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1)
        normalized = torch.nn.functional.normalize(pooled, p=2, dim=1)
        return [[float(x) for x in row] for row in normalized]
