"""Typological similarity between languages.

Each language carries five feature vectors — syntax (SYN), phonology (PHO),
phonetic inventory (INV), family membership (FAM), and geography (GEO) — with
entries in [0, 1] and gaps allowed. Gaps are filled by k-nearest-neighbor
imputation from typologically close languages; similarity on each feature is
a cosine, min-max normalized to [0, 100] over a batch of pairs; the overall
similarity of a pair is the mean of its five normalized feature values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError

FEATURES = ("SYN", "PHO", "INV", "FAM", "GEO")

LOW_RESOURCE_WIKI_SIZE = 7  # strictly below this is low-resource


@dataclass(frozen=True)
class LanguageProfile:
    """One language: ISO-style code, wiki size bucket, five feature vectors.

    Feature vectors are float64 with NaN marking missing entries.
    """

    code: str
    wiki_size: int
    features: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        if not self.code:
            raise DataError("language code must be non-empty")
        if self.wiki_size < 0:
            raise DataError(f"{self.code}: wiki_size must be >= 0, got {self.wiki_size}")
        if tuple(self.features) != FEATURES:
            raise DataError(
                f"{self.code}: features must be exactly {FEATURES} in order, "
                f"got {tuple(self.features)}"
            )
        for name, vector in self.features.items():
            if vector.ndim != 1 or vector.size == 0:
                raise DataError(f"{self.code}: feature {name} must be a non-empty vector")
            observed = vector[np.isfinite(vector)]
            if observed.size and (observed.min() < 0.0 or observed.max() > 1.0):
                raise DataError(
                    f"{self.code}: feature {name} has entries outside [0, 1]"
                )


def is_low_resource(profile: LanguageProfile) -> bool:
    """Low-resource means a wiki size bucket strictly below 7."""
    return profile.wiki_size < LOW_RESOURCE_WIKI_SIZE


def load_profiles(path: str | Path) -> list[LanguageProfile]:
    """Load language profiles from JSON lines.

    Each line: ``{"code": ..., "wiki_size": ..., "features": {"SYN": [...],
    ...}}`` with ``null`` marking a missing entry. All five features are
    required; per-feature lengths must agree across languages.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"profiles file not found: {path}")
    profiles: list[LanguageProfile] = []
    seen: set[str] = set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        try:
            code = record["code"]
            wiki_size = record["wiki_size"]
            features = record["features"]
        except (KeyError, TypeError) as exc:
            raise DataError(f"{path}:{lineno}: missing profile field {exc}") from exc
        if not isinstance(code, str) or not code:
            raise DataError(f"{path}:{lineno}: code must be a non-empty string")
        if code in seen:
            raise DataError(f"{path}:{lineno}: duplicate language code {code!r}")
        seen.add(code)
        if not isinstance(wiki_size, int) or isinstance(wiki_size, bool):
            raise DataError(f"{path}:{lineno}: wiki_size must be an integer")
        if not isinstance(features, dict) or set(features) != set(FEATURES):
            raise DataError(
                f"{path}:{lineno}: features must contain exactly {FEATURES}"
            )
        arrays: dict[str, np.ndarray] = {}
        for name in FEATURES:
            values = features[name]
            if not isinstance(values, list) or not values:
                raise DataError(
                    f"{path}:{lineno}: feature {name} must be a non-empty list"
                )
            row = np.empty(len(values), dtype=np.float64)
            for i, v in enumerate(values):
                if v is None:
                    row[i] = np.nan
                elif isinstance(v, (int, float)) and not isinstance(v, bool):
                    row[i] = float(v)
                else:
                    raise DataError(
                        f"{path}:{lineno}: feature {name}[{i}] must be a number or null"
                    )
            arrays[name] = row
        try:
            profiles.append(LanguageProfile(code, wiki_size, arrays))
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
    if not profiles:
        raise DataError(f"{path}: no profiles")
    _check_dims(profiles)
    return profiles


def _check_dims(profiles: list[LanguageProfile]) -> None:
    for name in FEATURES:
        dims = {p.features[name].size for p in profiles}
        if len(dims) > 1:
            raise DataError(f"feature {name} has inconsistent lengths {sorted(dims)}")


def _masked_cosine(a: np.ndarray, b: np.ndarray) -> float | None:
    """Cosine over mutually observed entries; None when nothing overlaps."""
    mask = np.isfinite(a) & np.isfinite(b)
    if not mask.any():
        return None
    av, bv = a[mask], b[mask]
    norm_a = float(np.linalg.norm(av))
    norm_b = float(np.linalg.norm(bv))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return float(np.clip(av @ bv / (norm_a * norm_b), -1.0, 1.0))


def impute_missing(profiles: list[LanguageProfile], k: int = 10) -> list[LanguageProfile]:
    """Fill feature gaps from the k most similar languages that observe them.

    For each feature, languages are ranked by cosine over the entries both
    sides originally observed (profile order breaks ties); each missing entry
    becomes the mean of that entry across the first k ranked donors that
    observed it. Donor values are always the original observations, so
    imputing an already-complete profile set is the identity and the result
    does not depend on fill order.
    """
    if k < 1:
        raise ConfigError(f"imputation k must be >= 1, got {k}")
    if not profiles:
        raise DataError("no profiles to impute")
    _check_dims(profiles)

    filled: list[dict[str, np.ndarray]] = [
        {name: p.features[name].copy() for name in FEATURES} for p in profiles
    ]
    for name in FEATURES:
        originals = [p.features[name] for p in profiles]
        observed_anywhere = np.zeros(originals[0].size, dtype=bool)
        for row in originals:
            observed_anywhere |= np.isfinite(row)
        gap = np.flatnonzero(~observed_anywhere)
        if gap.size:
            raise DataError(
                f"feature {name} entry {gap[0]} is observed in no language; "
                "cannot impute"
            )
        for xi, x_row in enumerate(originals):
            missing = np.flatnonzero(~np.isfinite(x_row))
            if not missing.size:
                continue
            if not np.isfinite(x_row).any():
                raise DataError(
                    f"{profiles[xi].code}: feature {name} has no observed entries; "
                    "cannot rank donors"
                )
            ranked = []
            for yi, y_row in enumerate(originals):
                if yi == xi:
                    continue
                sim = _masked_cosine(x_row, y_row)
                if sim is None:
                    continue
                ranked.append((-sim, yi))
            ranked.sort()
            for dim in missing:
                donors = [
                    originals[yi][dim]
                    for _, yi in ranked
                    if math.isfinite(originals[yi][dim])
                ][:k]
                if not donors:
                    raise DataError(
                        f"{profiles[xi].code}: no donor observes feature "
                        f"{name} entry {dim}"
                    )
                filled[xi][name][dim] = math.fsum(donors) / len(donors)
    return [
        LanguageProfile(p.code, p.wiki_size, features)
        for p, features in zip(profiles, filled)
    ]


@dataclass(frozen=True)
class SimilarityReport:
    """Per-feature similarities on [0, 100] plus their mean."""

    per_feature: dict[str, float]
    aggregate: float

    def __post_init__(self) -> None:
        if tuple(self.per_feature) != FEATURES:
            raise DataError(
                f"per_feature must cover exactly {FEATURES} in order"
            )
        mean = math.fsum(self.per_feature.values()) / len(FEATURES)
        if abs(mean - self.aggregate) > 1e-9:
            raise DataError(
                f"aggregate {self.aggregate!r} is not the mean of per-feature "
                f"values ({mean!r})"
            )


def _raw_cosines(a: LanguageProfile, b: LanguageProfile) -> dict[str, float]:
    raws = {}
    for name in FEATURES:
        va, vb = a.features[name], b.features[name]
        if not np.isfinite(va).all() or not np.isfinite(vb).all():
            raise DataError(
                f"feature {name} still has missing entries for pair "
                f"({a.code}, {b.code}); impute before comparing"
            )
        if va.size != vb.size:
            raise DataError(
                f"feature {name} length mismatch: {a.code}={va.size}, {b.code}={vb.size}"
            )
        norm_a = float(np.linalg.norm(va))
        norm_b = float(np.linalg.norm(vb))
        if norm_a == 0.0 or norm_b == 0.0:
            raws[name] = 0.0
        else:
            raws[name] = float(np.clip(va @ vb / (norm_a * norm_b), -1.0, 1.0))
    return raws


def batch_similarity(
    pairs: list[tuple[LanguageProfile, LanguageProfile]],
) -> list[SimilarityReport]:
    """Score a batch of pairs with shared min-max normalization per feature.

    Normalization needs spread: a feature whose raw cosines are identical
    across the whole batch cannot be scaled and is reported as an error.
    """
    if not pairs:
        raise DataError("no language pairs to score")
    raw_rows = [_raw_cosines(a, b) for a, b in pairs]
    reports = []
    bounds = {}
    for name in FEATURES:
        values = [row[name] for row in raw_rows]
        lo, hi = min(values), max(values)
        if lo == hi:
            raise DataError(
                f"feature {name} is constant across the batch; "
                "min-max normalization is undefined"
            )
        bounds[name] = (lo, hi)
    for row in raw_rows:
        scaled = {
            name: (row[name] - bounds[name][0])
            / (bounds[name][1] - bounds[name][0])
            * 100.0
            for name in FEATURES
        }
        reports.append(
            SimilarityReport(
                per_feature=scaled,
                aggregate=math.fsum(scaled.values()) / len(FEATURES),
            )
        )
    return reports


def pairwise_similarity(
    a: LanguageProfile,
    b: LanguageProfile,
    batch: list[tuple[LanguageProfile, LanguageProfile]],
) -> SimilarityReport:
    """Similarity of one pair, normalized over that pair plus a reference batch."""
    return batch_similarity([(a, b), *batch])[0]
