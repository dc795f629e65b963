import json
import math
import random

import numpy as np
import pytest

from parc import (
    ConfigError,
    DataError,
    FEATURES,
    LanguageProfile,
    SimilarityReport,
    batch_similarity,
    impute_missing,
    is_low_resource,
    load_profiles,
    pairwise_similarity,
)

NAN = float("nan")


def _profile(code, vectors, wiki_size=5):
    """All five features share one vector (keeps hand cases small)."""
    feats = {name: np.asarray(vectors, dtype=np.float64) for name in FEATURES}
    return LanguageProfile(code, wiki_size, feats)


def _mixed_profile(code, by_feature, wiki_size=5):
    feats = {name: np.asarray(by_feature[name], dtype=np.float64) for name in FEATURES}
    return LanguageProfile(code, wiki_size, feats)


# --- profiles ----------------------------------------------------------------


def test_profile_accepts_gaps():
    p = _profile("xx", [0.0, NAN, 1.0])
    assert np.isnan(p.features["PHO"][1])


@pytest.mark.parametrize(
    "kwargs",
    [
        {"code": ""},
        {"wiki_size": -1},
        {"vectors": [1.2, 0.0]},
        {"vectors": [-0.1]},
        {"vectors": []},
    ],
)
def test_profile_rejects(kwargs):
    base = {"code": "xx", "wiki_size": 5, "vectors": [0.5]}
    base.update(kwargs)
    with pytest.raises(DataError):
        _profile(base["code"], base["vectors"], base["wiki_size"])


def test_profile_requires_all_features_in_order():
    feats = {name: np.asarray([0.5]) for name in ("PHO", "SYN", "INV", "FAM", "GEO")}
    with pytest.raises(DataError, match="in order"):
        LanguageProfile("xx", 5, feats)


def test_low_resource_boundary():
    assert is_low_resource(_profile("sw", [0.5], wiki_size=6))
    assert not is_low_resource(_profile("en", [0.5], wiki_size=7))


def test_load_profiles_roundtrip(tmp_path):
    path = tmp_path / "p.jsonl"
    rows = [
        {"code": "aa", "wiki_size": 3,
         "features": {n: [0.1, None, 0.9] for n in FEATURES}},
        {"code": "bb", "wiki_size": 11,
         "features": {n: [0.2, 0.5, None] for n in FEATURES}},
    ]
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    profiles = load_profiles(path)
    assert [p.code for p in profiles] == ["aa", "bb"]
    assert profiles[0].wiki_size == 3
    assert np.isnan(profiles[0].features["SYN"][1])
    assert profiles[1].features["GEO"][1] == 0.5


@pytest.mark.parametrize(
    "record,fragment",
    [
        ({"code": "aa", "wiki_size": 3}, "missing profile field"),
        ({"code": "", "wiki_size": 3, "features": {}}, "non-empty string"),
        ({"code": "aa", "wiki_size": True,
          "features": {n: [0.1] for n in FEATURES}}, "integer"),
        ({"code": "aa", "wiki_size": 3, "features": {"SYN": [0.1]}}, "exactly"),
        ({"code": "aa", "wiki_size": 3,
          "features": {n: [True] for n in FEATURES}}, "number or null"),
        ({"code": "aa", "wiki_size": 3,
          "features": {n: ["x"] for n in FEATURES}}, "number or null"),
    ],
)
def test_load_profiles_rejects(tmp_path, record, fragment):
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps(record) + "\n")
    with pytest.raises(DataError, match=fragment):
        load_profiles(path)


def test_load_profiles_duplicate_code(tmp_path):
    row = json.dumps(
        {"code": "aa", "wiki_size": 3, "features": {n: [0.1] for n in FEATURES}}
    )
    path = tmp_path / "dup.jsonl"
    path.write_text(row + "\n" + row + "\n")
    with pytest.raises(DataError, match="duplicate"):
        load_profiles(path)


def test_load_profiles_inconsistent_lengths(tmp_path):
    rows = [
        {"code": "aa", "wiki_size": 3, "features": {n: [0.1] for n in FEATURES}},
        {"code": "bb", "wiki_size": 3, "features": {n: [0.1, 0.2] for n in FEATURES}},
    ]
    path = tmp_path / "p.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    with pytest.raises(DataError, match="inconsistent lengths"):
        load_profiles(path)


# --- imputation --------------------------------------------------------------


def test_impute_hand_case():
    """x=(1,1,?) with donors (1,1,0) and (0,1,1).

    Overlap cosines: with (1,1,0) → 1.0, with (0,1,1) → 0.5. k=2 averages
    both donors' third entry → 0.5; k=1 takes only the closer donor → 0.0.
    """
    profiles = [
        _profile("x", [1.0, 1.0, NAN]),
        _profile("near", [1.0, 1.0, 0.0]),
        _profile("far", [0.0, 1.0, 1.0]),
    ]
    two = impute_missing(profiles, k=2)
    assert two[0].features["SYN"][2] == pytest.approx(0.5)
    one = impute_missing(profiles, k=1)
    assert one[0].features["SYN"][2] == 0.0
    # Donors are untouched either way.
    for result in (one, two):
        assert np.array_equal(result[1].features["SYN"], [1.0, 1.0, 0.0])
        assert np.array_equal(result[2].features["SYN"], [0.0, 1.0, 1.0])


def test_impute_skips_donors_missing_the_entry():
    profiles = [
        _profile("x", [1.0, 1.0, NAN]),
        _profile("near-but-blind", [1.0, 1.0, NAN]),
        _profile("far", [0.0, 1.0, 0.8]),
    ]
    out = impute_missing(profiles, k=1)
    assert out[0].features["SYN"][2] == pytest.approx(0.8)


def test_impute_uses_original_observations_only():
    """Chained gaps must not cascade: donors contribute raw values, not fills."""
    profiles = [
        _profile("a", [1.0, NAN, NAN]),
        _profile("b", [1.0, 0.4, NAN]),
        _profile("c", [1.0, 0.8, 0.6]),
    ]
    out = impute_missing(profiles, k=2)
    # a[2] averages the only original observation (c's 0.6), never b's fill.
    assert out[0].features["SYN"][2] == pytest.approx(0.6)
    assert out[1].features["SYN"][2] == pytest.approx(0.6)


def test_impute_complete_profiles_is_identity():
    rng = random.Random(7)
    profiles = [
        _profile(f"l{i}", [rng.random() for _ in range(6)]) for i in range(5)
    ]
    out = impute_missing(profiles, k=3)
    for before, after in zip(profiles, out):
        for name in FEATURES:
            assert np.array_equal(before.features[name], after.features[name])


def test_impute_is_idempotent():
    rng = random.Random(21)
    successes = 0
    for trial in range(20):
        matrix = [
            [NAN if rng.random() < 0.3 else round(rng.random(), 3) for _ in range(5)]
            for _ in range(6)
        ]
        for row in matrix:  # every language observes something
            if all(math.isnan(v) for v in row):
                row[0] = 0.5
        for dim in range(5):  # every entry is observed somewhere
            if all(math.isnan(row[dim]) for row in matrix):
                matrix[0][dim] = 0.5
        profiles = [_profile(f"l{i}", row) for i, row in enumerate(matrix)]
        try:
            once = impute_missing(profiles, k=3)
        except DataError:
            continue  # donor ranking can still be impossible; rare, skip
        successes += 1
        twice = impute_missing(once, k=3)
        for p1, p2 in zip(once, twice):
            for name in FEATURES:
                assert np.array_equal(p1.features[name], p2.features[name])
    assert successes >= 10


def test_impute_rejects_k_below_one():
    with pytest.raises(ConfigError):
        impute_missing([_profile("a", [0.5])], k=0)


def test_impute_rejects_entry_observed_nowhere():
    profiles = [_profile("a", [0.5, NAN]), _profile("b", [0.4, NAN])]
    with pytest.raises(DataError, match="observed in no language"):
        impute_missing(profiles, k=1)


def test_impute_rejects_profile_with_nothing_observed():
    by_feature_a = {n: [0.5, 0.5] for n in FEATURES}
    by_feature_b = {n: [0.5, 0.5] for n in FEATURES}
    by_feature_b["GEO"] = [NAN, NAN]
    profiles = [
        _mixed_profile("a", by_feature_a),
        _mixed_profile("b", by_feature_b),
    ]
    with pytest.raises(DataError, match="no observed entries"):
        impute_missing(profiles, k=1)


# --- similarity --------------------------------------------------------------


def test_similarity_report_checks_aggregate():
    per = {n: 50.0 for n in FEATURES}
    SimilarityReport(per_feature=per, aggregate=50.0)
    with pytest.raises(DataError, match="mean"):
        SimilarityReport(per_feature=per, aggregate=51.0)


def test_batch_similarity_hand_case():
    """Three pairs with known cosines on every feature: 1.0, 0.5, 0.0.

    Min-max over the batch maps them to 100, 50, 0 on each feature, and the
    aggregate equals the per-feature value because all five features agree.
    """
    a = _profile("a", [1.0, 0.0])
    b = _profile("b", [1.0, 1.0])
    c = _profile("c", [0.0, 1.0])
    reports = batch_similarity([(a, a), (a, b), (a, c)])
    raw = [1.0, 1.0 / math.sqrt(2.0), 0.0]
    for report, value in zip(reports, raw):
        expected = (value - 0.0) / (1.0 - 0.0) * 100.0
        for name in FEATURES:
            assert report.per_feature[name] == pytest.approx(expected)
        assert report.aggregate == pytest.approx(expected)


def test_batch_similarity_scales_per_feature_independently():
    by_a = {n: [1.0, 0.0] for n in FEATURES}
    by_b = {n: [1.0, 1.0] for n in FEATURES}
    by_b["GEO"] = [0.0, 1.0]  # GEO disagrees: cosine 0 where others are 1/sqrt(2)
    a = _mixed_profile("a", by_a)
    b = _mixed_profile("b", by_b)
    c = _profile("c", [0.5, 0.5])
    # Raw cosines — SYN: (a,b)=(a,c)=1/sqrt(2), (a,a)=1; GEO: 0, 1/sqrt(2), 1.
    reports = batch_similarity([(a, b), (a, c), (a, a)])
    assert reports[0].per_feature["GEO"] == 0.0
    assert reports[0].per_feature["SYN"] == 0.0  # batch minimum for SYN too
    assert reports[1].per_feature["SYN"] == 0.0
    assert reports[1].per_feature["GEO"] == pytest.approx(100.0 / math.sqrt(2.0))
    assert all(v == pytest.approx(100.0) for v in reports[2].per_feature.values())


def test_batch_similarity_rejects_constant_feature():
    # Two copies of the same pair: every feature is constant; SYN is hit first.
    a = _profile("a", [1.0, 0.0])
    with pytest.raises(DataError, match="SYN is constant"):
        batch_similarity([(a, a), (a, a)])


def test_batch_similarity_requires_imputed_inputs():
    a = _profile("a", [1.0, NAN])
    b = _profile("b", [1.0, 0.0])
    with pytest.raises(DataError, match="impute before comparing"):
        batch_similarity([(a, b)])


def test_batch_similarity_range_and_extremes():
    rng = random.Random(3)
    profiles = [_profile(f"l{i}", [rng.random() for _ in range(4)]) for i in range(8)]
    pairs = [(profiles[i], profiles[j]) for i in range(8) for j in range(i + 1, 8)]
    reports = batch_similarity(pairs)
    for name in FEATURES:
        values = [r.per_feature[name] for r in reports]
        assert min(values) == pytest.approx(0.0)
        assert max(values) == pytest.approx(100.0)
        assert all(0.0 <= v <= 100.0 for v in values)


def test_pairwise_uses_shared_normalization():
    rng = random.Random(9)
    profiles = [_profile(f"l{i}", [rng.random() for _ in range(4)]) for i in range(6)]
    batch = [(profiles[i], profiles[j]) for i in range(6) for j in range(i + 1, 6)]
    target = (profiles[0], profiles[1])
    report = pairwise_similarity(*target, batch)
    full = batch_similarity([target, *batch])
    assert report == full[0]


def test_batch_similarity_empty():
    with pytest.raises(DataError):
        batch_similarity([])
