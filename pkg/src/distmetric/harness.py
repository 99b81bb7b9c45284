"""System-level evaluation harness.

Aggregates turn-level scores to system scores, correlates metric scores with
human ratings (Spearman over average-tie ranks and Pearson), profiles the
per-dimension normality of embedding sets with the Shapiro-Wilk test, and
renders correlation reports as markdown, CSV, or JSON.

Correlations are computed over systems, not turns: each system contributes
one (metric score, mean human rating) point.  Lower-better metrics are
negated before correlating so that +1 always means agreement with humans.
"""

from __future__ import annotations

import csv
import io as _stdio
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from statistics import NormalDist
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError, DomainError, InsufficientData
from .io import EmbeddingSet, RatingsTable
from .registry import DEFAULT_SEED, HIGHER_BETTER, LOWER_BETTER, category_rank

_ORIENTATIONS = (HIGHER_BETTER, LOWER_BETTER)
_BOUND_SLACK = 1e-9

# Declared score ranges per metric; enforced when scores are recorded.
_METRIC_BOUNDS = {
    "bleu": (0.0, 1.0),
    "rouge_l": (0.0, 1.0),
    "bertscore": (0.0, 1.0),
    "average": (-1.0, 1.0),
    "extrema": (-1.0, 1.0),
    "greedy": (-1.0, 1.0),
    "prd": (0.0, 1.0),
    "fbd": (0.0, math.inf),
}


def _check_score(metric: str, value: float) -> None:
    if not math.isfinite(value):
        raise DataError(f"{metric}: non-finite score {value!r}")
    bounds = _METRIC_BOUNDS.get(metric)
    if bounds is not None:
        lo, hi = bounds
        if value < lo - _BOUND_SLACK or value > hi + _BOUND_SLACK:
            raise DataError(f"{metric}: score {value} outside declared range [{lo}, {hi}]")


@dataclass(frozen=True)
class TurnScore:
    """Score of one (hypothesis, reference) turn under one metric."""

    metric: str
    value: float
    orientation: str = HIGHER_BETTER

    def __post_init__(self):
        if self.orientation not in _ORIENTATIONS:
            raise DomainError(f"orientation must be one of {_ORIENTATIONS}")
        _check_score(self.metric, self.value)


@dataclass(frozen=True)
class ScoreEntry:
    system_id: str
    metric: str
    value: float
    orientation: str


@dataclass(frozen=True, eq=False)
class ScoreTable:
    """One scalar score per (system, metric), with orientation flags."""

    entries: tuple = field(default_factory=tuple)

    def __post_init__(self):
        seen = set()
        for entry in self.entries:
            key = (entry.system_id, entry.metric)
            if key in seen:
                raise DataError(f"duplicate score entry for {key}")
            seen.add(key)
            if entry.orientation not in _ORIENTATIONS:
                raise DomainError(f"orientation must be one of {_ORIENTATIONS}")
            if not math.isfinite(entry.value):
                raise DataError(f"non-finite score for {key}")

    def metrics(self) -> list[str]:
        return sorted({e.metric for e in self.entries})

    def systems(self) -> list[str]:
        return sorted({e.system_id for e in self.entries})

    def by_metric(self, metric: str) -> dict:
        return {
            e.system_id: (e.value, e.orientation) for e in self.entries if e.metric == metric
        }


def aggregate_system_scores(turn_scores: Mapping[str, Sequence[TurnScore]]) -> ScoreTable:
    """Average turn-level scores per (system, metric).

    Distribution-level entries arrive as a single score per system and pass
    through unchanged (the mean of one value), keeping their orientation.
    """
    if not turn_scores:
        raise DataError("no systems to aggregate")
    entries = []
    for system_id in sorted(turn_scores):
        scores = list(turn_scores[system_id])
        if not scores:
            raise DataError(f"system {system_id!r} has no turn scores")
        grouped: dict[str, list[TurnScore]] = {}
        for score in scores:
            grouped.setdefault(score.metric, []).append(score)
        for metric in sorted(grouped):
            group = grouped[metric]
            orientations = {s.orientation for s in group}
            if len(orientations) > 1:
                raise DataError(f"metric {metric!r} has conflicting orientations")
            value = sum(s.value for s in group) / len(group)
            entries.append(ScoreEntry(system_id, metric, value, orientations.pop()))
    return ScoreTable(entries=tuple(entries))


def _validate_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise DomainError("inputs must be 1-d vectors")
    if x.size != y.size:
        raise DomainError(f"length mismatch: {x.size} != {y.size}")
    if x.size < 3:
        raise DomainError(f"need at least 3 points, got {x.size}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise DomainError("inputs must be finite")
    return x, y


def pearson(x, y) -> float:
    """Product-moment correlation; zero variance raises rather than returning 0."""
    x, y = _validate_pair(x, y)
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(xc @ xc)
    sy = float(yc @ yc)
    if sx == 0.0 or sy == 0.0:
        raise DataError("correlation undefined: zero variance")
    r = float(xc @ yc) / math.sqrt(sx * sy)
    return min(1.0, max(-1.0, r))


def rank_average_ties(x) -> np.ndarray:
    """1-based ranks; tied values share the average of their positions."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size, dtype=np.float64)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Pearson correlation of average-tie ranks."""
    x, y = _validate_pair(x, y)
    return pearson(rank_average_ties(x), rank_average_ties(y))


@dataclass(frozen=True)
class CorrelationRow:
    metric: str
    aspect: str
    spearman: float
    pearson: float
    n_systems: int

    def __post_init__(self):
        for name, value in (("spearman", self.spearman), ("pearson", self.pearson)):
            if not -1.0 <= value <= 1.0:
                raise DataError(f"{name} must lie in [-1, 1], got {value}")
        if self.n_systems < 3:
            raise DataError(f"reported rows need >= 3 systems, got {self.n_systems}")


@dataclass(frozen=True, eq=False)
class CorrelationReport:
    """Correlation rows plus a record of (metric, aspect) cells that were skipped."""

    rows: tuple = field(default_factory=tuple)
    skipped: tuple = field(default_factory=tuple)


def correlate(
    scores: ScoreTable, ratings: RatingsTable, aspect: str, *, min_systems: int = 3
) -> CorrelationReport:
    """Correlate every metric's oriented system scores with mean human ratings.

    Lower-better metrics are negated first.  Metrics with fewer than
    ``min_systems`` scored systems in common with the ratings, or with
    degenerate (zero-variance) values, are recorded under ``skipped``.
    """
    ratings_mean = ratings.mean_by_system(aspect)
    if not ratings_mean:
        raise InsufficientData(f"aspect {aspect!r} absent from ratings")
    common_any = set(scores.systems()) & set(ratings_mean)
    if len(common_any) < min_systems:
        raise InsufficientData(
            f"aspect {aspect!r}: only {len(common_any)} systems present in both tables"
        )
    rows = []
    skipped = []
    for metric in scores.metrics():
        per_system = scores.by_metric(metric)
        common = sorted(set(per_system) & set(ratings_mean))
        if len(common) < min_systems:
            skipped.append((metric, aspect, f"only {len(common)} common systems"))
            continue
        values = np.array(
            [
                per_system[s][0] if per_system[s][1] == HIGHER_BETTER else -per_system[s][0]
                for s in common
            ]
        )
        human = np.array([ratings_mean[s] for s in common])
        try:
            rows.append(
                CorrelationRow(
                    metric=metric,
                    aspect=aspect,
                    spearman=spearman(values, human),
                    pearson=pearson(values, human),
                    n_systems=len(common),
                )
            )
        except DataError as exc:
            skipped.append((metric, aspect, str(exc)))
    if not rows:
        raise DataError(
            f"aspect {aspect!r}: no metric could be correlated "
            f"({'; '.join(reason for _, _, reason in skipped)})"
        )
    return CorrelationReport(rows=tuple(rows), skipped=tuple(skipped))


def merge_reports(reports: Sequence[CorrelationReport]) -> CorrelationReport:
    rows: list[CorrelationRow] = []
    skipped: list[tuple] = []
    for report in reports:
        rows.extend(report.rows)
        skipped.extend(report.skipped)
    return CorrelationReport(rows=tuple(rows), skipped=tuple(skipped))


# --- Shapiro-Wilk normality (Royston's AS R94 approximation, 3 <= n <= 5000) ---

_SW_MIN_N = 3
_SW_MAX_N = 5000
_NORMAL = NormalDist()


class ShapiroResult:
    __slots__ = ("w", "p")

    def __init__(self, w: float, p: float):
        self.w = w
        self.p = p

    def __iter__(self):
        return iter((self.w, self.p))

    def __repr__(self):
        return f"ShapiroResult(w={self.w!r}, p={self.p!r})"


@lru_cache(maxsize=64)
def _sw_weights(n: int) -> np.ndarray:
    """Approximate best linear unbiased coefficients for order statistics."""
    if n == 3:
        root_half = math.sqrt(0.5)
        return np.array([-root_half, 0.0, root_half])
    m = np.array([_NORMAL.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)])
    msq = float(m @ m)
    c = m / math.sqrt(msq)
    u = 1.0 / math.sqrt(n)
    a = np.zeros(n)
    a[-1] = np.polyval([-2.706056, 4.434685, -2.071190, -0.147981, 0.221157, c[-1]], u)
    a[0] = -a[-1]
    if n > 5:
        a[-2] = np.polyval([-3.582633, 5.682633, -1.752461, -0.293762, 0.042981, c[-2]], u)
        a[1] = -a[-2]
        lo = 2
        phi = (msq - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2) / (
            1.0 - 2.0 * a[-1] ** 2 - 2.0 * a[-2] ** 2
        )
    else:
        lo = 1
        phi = (msq - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * a[-1] ** 2)
    a[lo : n - lo] = m[lo : n - lo] / math.sqrt(phi)
    return a


def shapiro_wilk(sample) -> ShapiroResult:
    """W statistic and p-value for the hypothesis that ``sample`` is Gaussian."""
    x = np.asarray(sample, dtype=np.float64)
    if x.ndim != 1:
        raise DomainError("sample must be a 1-d vector")
    n = x.size
    if n < _SW_MIN_N or n > _SW_MAX_N:
        raise DomainError(f"sample size must be in [{_SW_MIN_N}, {_SW_MAX_N}], got {n}")
    if not np.isfinite(x).all():
        raise DataError("sample contains non-finite values")
    x = np.sort(x)
    if x[-1] - x[0] == 0.0:
        raise DataError("zero variance: all sample values identical")
    x = x - np.median(x)  # location shift for numerical stability only
    a = _sw_weights(n)
    num = float(a @ x) ** 2
    xc = x - x.mean()
    den = float(xc @ xc)
    w = min(num / den, 1.0)

    if n == 3:
        p = (6.0 / math.pi) * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        return ShapiroResult(w, min(max(p, 0.0), 1.0))
    y = math.log1p(-w)
    if n <= 11:
        gamma = 0.459 * n - 2.273
        if y >= gamma:
            return ShapiroResult(w, 0.0)
        y = -math.log(gamma - y)
        mu = np.polyval([-0.0006714, 0.025054, -0.39978, 0.5440], n)
        sigma = math.exp(np.polyval([-0.0020322, 0.062767, -0.77857, 1.3822], n))
    else:
        ln_n = math.log(n)
        mu = np.polyval([0.0038915, -0.083751, -0.31082, -1.5861], ln_n)
        sigma = math.exp(np.polyval([0.0030302, -0.082676, -0.4803], ln_n))
    z = (y - mu) / sigma
    return ShapiroResult(w, 1.0 - _NORMAL.cdf(z))


@dataclass(frozen=True)
class NormalityProfile:
    mean_w: float
    std_w: float
    n_dims: int
    n_skipped: int


def normality_profile(
    emb: EmbeddingSet, *, max_samples: int = _SW_MAX_N, seed: int = DEFAULT_SEED
) -> NormalityProfile:
    """Shapiro-Wilk W per embedding dimension, summarized as mean +/- std.

    Sets larger than ``max_samples`` rows are subsampled once with the fixed
    seed.  Dimensions with zero variance are excluded and counted.
    """
    data = emb.data.astype(np.float64, copy=False)
    if emb.count > max_samples:
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(emb.count, size=max_samples, replace=False))
        data = data[idx]
    ws = []
    skipped = 0
    for d in range(data.shape[1]):
        try:
            ws.append(shapiro_wilk(data[:, d]).w)
        except DataError:
            skipped += 1
    if not ws:
        raise DataError("every dimension has zero variance")
    ws_arr = np.array(ws)
    return NormalityProfile(
        mean_w=float(ws_arr.mean()),
        std_w=float(ws_arr.std()),
        n_dims=len(ws),
        n_skipped=skipped,
    )


# --- report rendering ---

_CATEGORY_TITLES = {
    0: "Word-overlap metrics",
    1: "Embedding-based metrics",
    2: "Distribution-based metrics",
    3: "Other metrics",
}

REPORT_FORMATS = ("markdown", "csv", "json")


def _sorted_rows(report: CorrelationReport) -> list[CorrelationRow]:
    return sorted(report.rows, key=lambda r: (category_rank(r.metric), r.metric, r.aspect))


def render_report(report: CorrelationReport, fmt: str = "markdown") -> str:
    """Render a correlation report deterministically in the requested format."""
    if fmt not in REPORT_FORMATS:
        raise DomainError(f"format must be one of {REPORT_FORMATS}, got {fmt!r}")
    if not report.rows:
        raise DataError("empty report")
    rows = _sorted_rows(report)

    if fmt == "markdown":
        lines = [
            "| Metric | Aspect | Spearman | Pearson | Systems |",
            "|:--|:--|--:|--:|--:|",
        ]
        current_rank = None
        for row in rows:
            rank = category_rank(row.metric)
            if rank != current_rank:
                lines.append(f"| **{_CATEGORY_TITLES[rank]}** | | | | |")
                current_rank = rank
            lines.append(
                f"| {row.metric} | {row.aspect} | {row.spearman:.3f} | "
                f"{row.pearson:.3f} | {row.n_systems} |"
            )
        for metric, aspect, reason in report.skipped:
            lines.append(f"_skipped: {metric} @ {aspect} ({reason})_")
        return "\n".join(lines) + "\n"

    if fmt == "csv":
        buf = _stdio.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["metric", "aspect", "spearman", "pearson", "n_systems"])
        for row in rows:
            writer.writerow(
                [row.metric, row.aspect, repr(row.spearman), repr(row.pearson), row.n_systems]
            )
        for metric, aspect, reason in report.skipped:
            buf.write(f"# skipped: {metric},{aspect},{reason}\n")
        return buf.getvalue()

    payload = {
        "rows": [
            {
                "metric": r.metric,
                "aspect": r.aspect,
                "spearman": r.spearman,
                "pearson": r.pearson,
                "n_systems": r.n_systems,
            }
            for r in rows
        ],
        "skipped": [
            {"metric": m, "aspect": a, "reason": reason} for m, a, reason in report.skipped
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def parse_report_csv(text: str) -> CorrelationReport:
    """Parse CSV produced by :func:`render_report`; inverse up to row ordering."""
    skipped = []
    data_lines = []
    for line in text.splitlines():
        if line.startswith("# skipped: "):
            metric, aspect, reason = line[len("# skipped: ") :].split(",", 2)
            skipped.append((metric, aspect, reason))
        elif line.strip():
            data_lines.append(line)
    reader = csv.reader(data_lines)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty report CSV") from None
    if header != ["metric", "aspect", "spearman", "pearson", "n_systems"]:
        raise DataError(f"unexpected report header: {header}")
    rows = []
    for record in reader:
        if len(record) != 5:
            raise DataError(f"expected 5 fields, got {record}")
        rows.append(
            CorrelationRow(
                metric=record[0],
                aspect=record[1],
                spearman=float(record[2]),
                pearson=float(record[3]),
                n_systems=int(record[4]),
            )
        )
    return CorrelationReport(rows=tuple(rows), skipped=tuple(skipped))


# --- score table persistence (audit trail for studies) ---

_SCORE_HEADER = ["system_id", "metric", "value", "orientation"]


def score_table_to_csv(table: ScoreTable) -> str:
    buf = _stdio.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_SCORE_HEADER)
    for entry in sorted(table.entries, key=lambda e: (e.system_id, e.metric)):
        writer.writerow([entry.system_id, entry.metric, repr(entry.value), entry.orientation])
    return buf.getvalue()


def score_table_from_csv(text: str) -> ScoreTable:
    reader = csv.reader(_stdio.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty score table CSV") from None
    if header != _SCORE_HEADER:
        raise DataError(f"unexpected score table header: {header}")
    entries = []
    for record in reader:
        if not record:
            continue
        if len(record) != 4:
            raise DataError(f"expected 4 fields, got {record}")
        system_id, metric, value_text, orientation = record
        if value_text == "ERR":
            continue  # failed cells are audit-only
        entries.append(ScoreEntry(system_id, metric, float(value_text), orientation))
    return ScoreTable(entries=tuple(entries))
