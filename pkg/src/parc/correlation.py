"""Rank and linear correlation with exact significance options.

Coefficients are computed from scratch with compensated summation so results
are reproducible to the last bit. Two p-value routes: the classical
t-distribution approximation, and a permutation test that is exhaustive when
the sample is small enough to enumerate and seeded Monte Carlo otherwise.

Also hosts the reference-comparison study: recomputing the bundled 50-pair
accuracy/similarity correlations and checking them against the bundled
reference table.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from typing import Sequence

from scipy.stats import t as _student_t

from .errors import ConfigError, DataError

_EXHAUSTIVE_LIMIT = 7  # 7! = 5040 permutations; beyond this, sample
SIGNIFICANCE_LEVEL = 0.05


@dataclass(frozen=True)
class CorrelationResult:
    coefficient: float
    p_value: float
    n: int
    method: str  # "pearson" | "spearman"
    p_method: str  # "t_approx" | "permutation_exhaustive" | "permutation_monte_carlo"

    @property
    def significant(self) -> bool:
        return self.p_value <= SIGNIFICANCE_LEVEL


def _as_floats(values: Sequence[float], name: str) -> list[float]:
    out = [float(v) for v in values]
    if any(not math.isfinite(v) for v in out):
        raise DataError(f"{name} contains non-finite values")
    return out


def _ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks, ties sharing the average of their positions."""
    n = len(values)
    order = sorted(range(n), key=lambda i: values[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        average = (i + j + 2) / 2.0
        for t in range(i, j + 1):
            ranks[order[t]] = average
        i = j + 1
    return ranks


def _pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    n = len(x)
    mean_x = math.fsum(x) / n
    mean_y = math.fsum(y) / n
    dx = [xi - mean_x for xi in x]
    dy = [yi - mean_y for yi in y]
    var_x = math.fsum(d * d for d in dx)
    var_y = math.fsum(d * d for d in dy)
    if var_x == 0.0 or var_y == 0.0:
        raise DataError("correlation is undefined for a zero-variance input")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(var_x * var_y)
    return max(-1.0, min(1.0, r))


def _t_approx_p(r: float, n: int) -> float:
    if abs(r) >= 1.0:
        return 0.0
    t_stat = r * math.sqrt((n - 2) / (1.0 - r * r))
    return min(1.0, 2.0 * float(_student_t.sf(abs(t_stat), n - 2)))


def _permutation_p(
    x: list[float],
    y: list[float],
    observed: float,
    resamples: int,
    seed: int,
) -> tuple[float, str]:
    threshold = abs(observed)
    if len(y) <= _EXHAUSTIVE_LIMIT:
        total = 0
        extreme = 0
        for perm in itertools.permutations(y):
            total += 1
            if abs(_pearson_r(x, perm)) >= threshold:
                extreme += 1
        return extreme / total, "permutation_exhaustive"
    if resamples < 1:
        raise ConfigError(f"resamples must be >= 1, got {resamples}")
    rng = random.Random(seed)
    shuffled = list(y)
    extreme = 0
    for _ in range(resamples):
        rng.shuffle(shuffled)
        if abs(_pearson_r(x, shuffled)) >= threshold:
            extreme += 1
    return (1 + extreme) / (resamples + 1), "permutation_monte_carlo"


def _correlate(
    x: Sequence[float],
    y: Sequence[float],
    method: str,
    p_method: str,
    resamples: int,
    seed: int,
) -> CorrelationResult:
    if p_method not in ("t_approx", "permutation"):
        raise ConfigError(f"p_method must be 't_approx' or 'permutation', got {p_method!r}")
    if len(x) != len(y):
        raise DataError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 3:
        raise DataError(f"need at least 3 observations, got {len(x)}")
    xs = _as_floats(x, "x")
    ys = _as_floats(y, "y")
    if method == "spearman":
        xs, ys = _ranks(xs), _ranks(ys)
    r = _pearson_r(xs, ys)
    if p_method == "t_approx":
        return CorrelationResult(r, _t_approx_p(r, len(xs)), len(xs), method, "t_approx")
    # Ranking commutes with permutation (a reordered vector has the reordered
    # ranks), so Spearman permutes the precomputed rank vector directly.
    p, p_method_used = _permutation_p(xs, ys, r, resamples, seed)
    return CorrelationResult(r, p, len(xs), method, p_method_used)


def pearson(
    x: Sequence[float],
    y: Sequence[float],
    *,
    p_method: str = "t_approx",
    resamples: int = 10000,
    seed: int = 0,
) -> CorrelationResult:
    """Linear correlation of two equal-length sequences (n >= 3)."""
    return _correlate(x, y, "pearson", p_method, resamples, seed)


def spearman(
    x: Sequence[float],
    y: Sequence[float],
    *,
    p_method: str = "t_approx",
    resamples: int = 10000,
    seed: int = 0,
) -> CorrelationResult:
    """Rank correlation: exactly the linear correlation of the average ranks."""
    return _correlate(x, y, "spearman", p_method, resamples, seed)


# --- reference comparison over the bundled 50-pair table ---------------------

PREDICTOR_COLUMNS = ("sim", "wiki_target", "wiki_source")
SETTING_COLUMNS = {
    "labeled": "accuracy_labeled",
    "unlabeled": "accuracy_unlabeled",
}
EXPECTED_ROWS = 50


@dataclass(frozen=True)
class CorrelationCell:
    """One recomputed table cell next to its bundled reference value."""

    setting: str
    method: str
    predictor: str
    coefficient: float
    p_value: float
    significant: bool
    reference_coefficient: float
    reference_significant: bool
    coefficient_ok: bool
    significance_ok: bool

    @property
    def ok(self) -> bool:
        return self.coefficient_ok and self.significance_ok


@dataclass(frozen=True)
class ReferenceComparison:
    cells: tuple[CorrelationCell, ...]
    tolerance: float
    n_rows: int

    @property
    def ok(self) -> bool:
        return all(cell.ok for cell in self.cells)


def reproduce_reference_correlations(
    rows: list[dict] | None = None,
    *,
    tolerance: float = 0.03,
) -> ReferenceComparison:
    """Recompute every correlation cell from the 50 accuracy/similarity rows.

    For both transfer settings and both correlation methods, correlates
    target-language accuracy against language similarity and both wiki-size
    columns, then compares each coefficient (within `tolerance`) and each
    significance flag (exactly) against the bundled reference table.
    """
    from .fixtures import load_fixture

    if rows is None:
        rows = [dict(row) for row in load_fixture("fifty_pairs").rows]
    if len(rows) != EXPECTED_ROWS:
        raise DataError(f"expected {EXPECTED_ROWS} pair rows, got {len(rows)}")

    reference = {}
    for ref in load_fixture("correlation_reference").rows:
        key = (ref["setting"], ref["method"], ref["predictor"])
        reference[key] = (float(ref["coefficient"]), bool(ref["significant"]))
    cells = []
    for setting, accuracy_column in SETTING_COLUMNS.items():
        accuracies = [float(row[accuracy_column]) for row in rows]
        for predictor in PREDICTOR_COLUMNS:
            xs = [float(row[predictor]) for row in rows]
            for method, fn in (("pearson", pearson), ("spearman", spearman)):
                result = fn(xs, accuracies)
                key = (setting, method, predictor)
                try:
                    ref_coefficient, ref_significant = reference[key]
                except KeyError:
                    raise DataError(f"reference table lacks cell {key}") from None
                cells.append(
                    CorrelationCell(
                        setting=setting,
                        method=method,
                        predictor=predictor,
                        coefficient=result.coefficient,
                        p_value=result.p_value,
                        significant=result.significant,
                        reference_coefficient=ref_coefficient,
                        reference_significant=ref_significant,
                        coefficient_ok=abs(result.coefficient - ref_coefficient)
                        <= tolerance,
                        significance_ok=result.significant == ref_significant,
                    )
                )
    return ReferenceComparison(
        cells=tuple(cells), tolerance=tolerance, n_rows=len(rows)
    )
