"""Conformance checks for a live scoring service.

Any service claiming to speak the backend protocol (POST /score, POST /embed,
GET /info) can be pointed at `check_scorer_service`. The structural checks
are model-agnostic: shapes, alignment, determinism, batching, and error
behavior. The optional smoke checks add two semantic sanity probes that only
make sense against a real pretrained model.
"""

from __future__ import annotations

import math

import httpx

from .errors import BackendError


def _close(a: float, b: float, tolerance: float = 1e-6) -> bool:
    return abs(a - b) <= tolerance


def check_scorer_service(
    base_url: str, *, smoke: bool = False, timeout: float = 60.0
) -> list[str]:
    """Run the protocol conformance suite; returns names of passed checks.

    Raises BackendError naming the first failed check. `smoke=True` adds the
    real-model semantic probes (paraphrase ordering, factual mask fill).
    """
    passed: list[str] = []
    client = httpx.Client(base_url=base_url.rstrip("/"), timeout=timeout)

    def check(name: str, condition: bool, detail: str) -> None:
        if not condition:
            raise BackendError(f"{name}: {detail}")
        passed.append(name)

    def post(path: str, payload: dict) -> httpx.Response:
        try:
            return client.post(path, json=payload)
        except httpx.HTTPError as exc:
            raise BackendError(f"POST {path} transport failure: {exc}") from exc

    def score(prompts: list[str], candidates: list[str]) -> list[list[float]]:
        response = post("/score", {"prompts": prompts, "candidates": candidates})
        if response.status_code != 200:
            raise BackendError(
                f"/score returned {response.status_code}: {response.text[:200]}"
            )
        body = response.json()
        probs = body.get("probs")
        if not isinstance(probs, list) or len(probs) != len(prompts):
            raise BackendError(f"/score probs shape wrong for {len(prompts)} prompts")
        return [[float(p) for p in row] for row in probs]

    def embed(texts: list[str]) -> list[list[float]]:
        response = post("/embed", {"texts": texts})
        if response.status_code != 200:
            raise BackendError(
                f"/embed returned {response.status_code}: {response.text[:200]}"
            )
        body = response.json()
        vectors, dim = body.get("vectors"), body.get("dim")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise BackendError(f"/embed vectors shape wrong for {len(texts)} texts")
        if not isinstance(dim, int) or any(len(v) != dim for v in vectors):
            raise BackendError(f"/embed dim field inconsistent with vectors")
        return [[float(x) for x in v] for v in vectors]

    try:
        response = client.get("/info")
    except httpx.HTTPError as exc:
        raise BackendError(f"GET /info transport failure: {exc}") from exc
    check("info.status", response.status_code == 200, f"got {response.status_code}")
    info = response.json()
    check(
        "info.schema",
        isinstance(info, dict)
        and isinstance(info.get("model"), str)
        and isinstance(info.get("deterministic"), bool),
        f"need string model and boolean deterministic, got {info}",
    )
    deterministic = bool(info["deterministic"])

    prompt = "the film was absolutely [MASK] tonight"
    candidates = ["great", "terrible"]
    rows = score([prompt], candidates)
    row = rows[0]
    check("score.width", len(row) == len(candidates), f"{len(row)} probs for 2 candidates")
    check(
        "score.range",
        all(math.isfinite(p) and p >= 0.0 for p in row)
        and math.fsum(row) <= 1.0 + 1e-6,
        f"probabilities out of range: {row}",
    )
    swapped = score([prompt], list(reversed(candidates)))[0]
    check(
        "score.alignment",
        all(_close(row[i], swapped[len(row) - 1 - i]) for i in range(len(row))),
        f"reversing candidates did not reverse probabilities: {row} vs {swapped}",
    )
    if deterministic:
        again = score([prompt], candidates)[0]
        check("score.deterministic", again == row, f"{row} vs {again} on repeat")
    second_prompt = "service checks are [MASK] to write"
    batch = score([prompt, second_prompt], candidates)
    solo = score([second_prompt], candidates)[0]
    check(
        "score.batching",
        all(_close(a, b) for a, b in zip(batch[0], row))
        and all(_close(a, b) for a, b in zip(batch[1], solo)),
        "batched scores differ from singly computed scores",
    )

    vectors = embed(["hello world"])
    norm = math.sqrt(math.fsum(x * x for x in vectors[0]))
    check("embed.norm", _close(norm, 1.0, 1e-4), f"vector norm {norm}")
    if deterministic:
        again_vec = embed(["hello world"])
        check("embed.deterministic", again_vec == vectors, "embedding changed on repeat")
    pair = embed(["hello world", "completely different text"])
    check(
        "embed.batching",
        all(_close(a, b) for a, b in zip(pair[0], vectors[0])),
        "batched embedding differs from singly computed embedding",
    )

    no_mask = post("/score", {"prompts": ["no mask here"], "candidates": candidates})
    check(
        "score.rejects_zero_masks",
        no_mask.status_code >= 400,
        f"expected an error status, got {no_mask.status_code}",
    )
    two_masks = post(
        "/score",
        {"prompts": ["one [MASK] and two [MASK]"], "candidates": candidates},
    )
    check(
        "score.rejects_multiple_masks",
        two_masks.status_code >= 400,
        f"expected an error status, got {two_masks.status_code}",
    )

    if smoke:
        a, b, c = embed(
            [
                "A man is playing a guitar.",
                "Someone plays the guitar.",
                "The weather is cold today.",
            ]
        )
        sim_ab = math.fsum(x * y for x, y in zip(a, b))
        sim_ac = math.fsum(x * y for x, y in zip(a, c))
        check(
            "smoke.paraphrase_ordering",
            sim_ab > sim_ac,
            f"paraphrase cosine {sim_ab} not above unrelated cosine {sim_ac}",
        )
        france, dog = score(
            ["Paris is the capital of [MASK]."], ["France", "dog"]
        )[0]
        check(
            "smoke.factual_fill",
            france > dog,
            f"P(France)={france} not above P(dog)={dog}",
        )

    client.close()
    return passed
