"""Correlation-study driver: evaluate many systems against one real corpus.

A study is described by a JSON manifest naming the real-side inputs, one
entry per system, a ratings file, and the metric list with parameters.
Per-(system, metric) failures are recorded and surfaced as ``ERR`` cells in
the audit table; the study keeps going as long as at least three systems
score cleanly per metric.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines
from .errors import DistMetricError, DataError, FormatError, InsufficientData, IoError
from .frechet import COV_DIVISORS, MEAN_NORMS, fbd_from_sets
from .harness import (
    CorrelationReport,
    ScoreTable,
    TurnScore,
    aggregate_system_scores,
    correlate,
    merge_reports,
)
from .io import (
    EmbeddingSet,
    RatingsTable,
    TokenEmbeddingArchive,
    WordVectorTable,
    read_embedding_set,
    read_ratings,
    read_token_archive,
    read_word_vectors,
)
from .prd import DEFAULT_ANGLES, DEFAULT_CLUSTERS, DEFAULT_RUNS, prd_from_sets
from .registry import DEFAULT_SEED, METRICS, metric_info

THREADS_ENV = "DISTMETRIC_THREADS"

_EMBEDDING_METRICS = {"fbd", "prd"}
_TEXT_METRICS = {"bleu", "rouge_l", "average", "extrema", "greedy"}
_WORDVEC_METRICS = {"average", "extrema", "greedy"}


@dataclass(frozen=True)
class SystemEntry:
    system_id: str
    embeddings: Path | None = None
    hypothesis_text: Path | None = None
    hypothesis_tokens: Path | None = None


@dataclass(frozen=True)
class StudyParams:
    k: int = DEFAULT_CLUSTERS
    m: int = DEFAULT_ANGLES
    runs: int = DEFAULT_RUNS
    seed: int = DEFAULT_SEED
    max_n: int = 4
    mean_norm: str = "squared"
    cov_divisor: str = "n-1"
    cov_ridge: float = 0.0


@dataclass(frozen=True)
class StudyManifest:
    systems: tuple
    metrics: tuple
    ratings: Path
    real_embeddings: Path | None = None
    reference_text: Path | None = None
    reference_tokens: Path | None = None
    word_vectors: Path | None = None
    aspects: tuple | None = None
    params: StudyParams = field(default_factory=StudyParams)


def _require_path(raw, base: Path, what: str) -> Path:
    if not isinstance(raw, str) or not raw:
        raise FormatError(f"manifest field {what!r} must be a non-empty path string")
    path = (base / raw).resolve() if not os.path.isabs(raw) else Path(raw)
    if not path.exists():
        raise IoError(f"manifest path for {what!r} does not exist: {path}")
    return path


def load_manifest(path) -> StudyManifest:
    """Load and validate a study manifest; all referenced paths must exist."""
    path = Path(path)
    if not path.is_file():
        raise IoError(f"no such manifest: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise IoError(f"{path}: read failed: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise FormatError(f"{path}: manifest must be a JSON object")
    base = path.parent

    metrics = raw.get("metrics")
    if not isinstance(metrics, list) or not metrics:
        raise FormatError(f"{path}: 'metrics' must be a non-empty list")
    for name in metrics:
        metric_info(name)  # unknown names abort here, naming the metric

    systems_raw = raw.get("systems")
    if not isinstance(systems_raw, list):
        raise FormatError(f"{path}: 'systems' must be a list")
    if len(systems_raw) < 3:
        raise InsufficientData(
            f"{path}: correlation needs >= 3 systems, manifest lists {len(systems_raw)}"
        )
    systems = []
    seen_ids = set()
    for i, entry in enumerate(systems_raw):
        if not isinstance(entry, dict) or "system_id" not in entry:
            raise FormatError(f"{path}: systems[{i}] must be an object with 'system_id'")
        system_id = entry["system_id"]
        if system_id in seen_ids:
            raise DataError(f"{path}: duplicate system_id {system_id!r}")
        seen_ids.add(system_id)
        systems.append(
            SystemEntry(
                system_id=system_id,
                embeddings=(
                    _require_path(entry["embeddings"], base, f"systems[{i}].embeddings")
                    if "embeddings" in entry
                    else None
                ),
                hypothesis_text=(
                    _require_path(entry["hypothesis_text"], base, f"systems[{i}].hypothesis_text")
                    if "hypothesis_text" in entry
                    else None
                ),
                hypothesis_tokens=(
                    _require_path(
                        entry["hypothesis_tokens"], base, f"systems[{i}].hypothesis_tokens"
                    )
                    if "hypothesis_tokens" in entry
                    else None
                ),
            )
        )

    params_raw = raw.get("params", {})
    if not isinstance(params_raw, dict):
        raise FormatError(f"{path}: 'params' must be an object")
    defaults = StudyParams()
    try:
        params = StudyParams(
            k=int(params_raw.get("k", defaults.k)),
            m=int(params_raw.get("m", defaults.m)),
            runs=int(params_raw.get("runs", defaults.runs)),
            seed=int(params_raw.get("seed", defaults.seed)),
            max_n=int(params_raw.get("max_n", defaults.max_n)),
            mean_norm=str(params_raw.get("mean_norm", defaults.mean_norm)),
            cov_divisor=str(params_raw.get("cov_divisor", defaults.cov_divisor)),
            cov_ridge=float(params_raw.get("cov_ridge", defaults.cov_ridge)),
        )
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: bad params: {exc}") from exc
    if params.mean_norm not in MEAN_NORMS:
        raise FormatError(f"{path}: mean_norm must be one of {MEAN_NORMS}")
    if params.cov_divisor not in COV_DIVISORS:
        raise FormatError(f"{path}: cov_divisor must be one of {COV_DIVISORS}")

    aspects = raw.get("aspects")
    if aspects is not None:
        if not isinstance(aspects, list) or not all(isinstance(a, str) for a in aspects):
            raise FormatError(f"{path}: 'aspects' must be a list of strings")
        aspects = tuple(aspects)

    manifest = StudyManifest(
        systems=tuple(systems),
        metrics=tuple(metrics),
        ratings=_require_path(raw.get("ratings"), base, "ratings"),
        real_embeddings=(
            _require_path(raw["real_embeddings"], base, "real_embeddings")
            if "real_embeddings" in raw
            else None
        ),
        reference_text=(
            _require_path(raw["reference_text"], base, "reference_text")
            if "reference_text" in raw
            else None
        ),
        reference_tokens=(
            _require_path(raw["reference_tokens"], base, "reference_tokens")
            if "reference_tokens" in raw
            else None
        ),
        word_vectors=(
            _require_path(raw["word_vectors"], base, "word_vectors")
            if "word_vectors" in raw
            else None
        ),
        aspects=aspects,
        params=params,
    )
    _check_requirements(manifest)
    return manifest


def _check_requirements(manifest: StudyManifest) -> None:
    wanted = set(manifest.metrics)
    if wanted & _EMBEDDING_METRICS:
        if manifest.real_embeddings is None:
            raise FormatError("fbd/prd require 'real_embeddings'")
        missing = [s.system_id for s in manifest.systems if s.embeddings is None]
        if missing:
            raise FormatError(f"fbd/prd require 'embeddings' for systems: {missing}")
    if wanted & _TEXT_METRICS:
        if manifest.reference_text is None:
            raise FormatError("text metrics require 'reference_text'")
        missing = [s.system_id for s in manifest.systems if s.hypothesis_text is None]
        if missing:
            raise FormatError(f"text metrics require 'hypothesis_text' for systems: {missing}")
    if wanted & _WORDVEC_METRICS and manifest.word_vectors is None:
        raise FormatError("average/extrema/greedy require 'word_vectors'")
    if "bertscore" in wanted:
        if manifest.reference_tokens is None:
            raise FormatError("bertscore requires 'reference_tokens'")
        missing = [s.system_id for s in manifest.systems if s.hypothesis_tokens is None]
        if missing:
            raise FormatError(f"bertscore requires 'hypothesis_tokens' for systems: {missing}")


@dataclass(frozen=True)
class StudyResult:
    scores: ScoreTable
    report: CorrelationReport
    errors: tuple  # (system_id, metric, message)
    ratings: RatingsTable


@dataclass(frozen=True)
class _SharedInputs:
    real_emb: EmbeddingSet | None
    ref_pairs_text: list | None  # reference lines, paired per system later
    ref_tokens: TokenEmbeddingArchive | None
    word_vectors: WordVectorTable | None


def _load_shared(manifest: StudyManifest) -> _SharedInputs:
    wanted = set(manifest.metrics)
    real_emb = None
    if wanted & _EMBEDDING_METRICS:
        real_emb = read_embedding_set(manifest.real_embeddings, system_id="real")
    ref_lines = None
    if wanted & _TEXT_METRICS:
        with open(manifest.reference_text, encoding="utf-8") as fh:
            ref_lines = fh.read().splitlines()
    ref_tokens = None
    if "bertscore" in wanted:
        ref_tokens = read_token_archive(manifest.reference_tokens)
    word_vectors = None
    if wanted & _WORDVEC_METRICS:
        word_vectors = read_word_vectors(manifest.word_vectors)
    return _SharedInputs(real_emb, ref_lines, ref_tokens, word_vectors)


def _system_seeds(params: StudyParams, n_systems: int) -> list[int]:
    children = np.random.SeedSequence(params.seed).spawn(n_systems)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def _score_system_metric(
    metric: str,
    system: SystemEntry,
    shared: _SharedInputs,
    params: StudyParams,
    seed: int,
) -> list[TurnScore]:
    info = METRICS[metric]
    orientation = info.orientation
    if metric == "fbd":
        emb = read_embedding_set(system.embeddings, system_id=system.system_id)
        value = fbd_from_sets(
            shared.real_emb,
            emb,
            mean_norm=params.mean_norm,
            divisor=params.cov_divisor,
            ridge=params.cov_ridge,
        )
        return [TurnScore(metric, value, orientation)]
    if metric == "prd":
        emb = read_embedding_set(system.embeddings, system_id=system.system_id)
        curve = prd_from_sets(
            shared.real_emb, emb, k=params.k, m=params.m, runs=params.runs, seed=seed
        )
        return [TurnScore(metric, curve.max_f1, orientation)]
    if metric == "bertscore":
        hyp_archive = read_token_archive(system.hypothesis_tokens)
        ref_archive = shared.ref_tokens
        if len(hyp_archive) != len(ref_archive):
            raise DataError(
                f"token archives are not line-aligned: "
                f"{len(hyp_archive)} vs {len(ref_archive)} sentences"
            )
        scores = []
        for hyp_sent, ref_sent in zip(hyp_archive.sentences, ref_archive.sentences):
            if hyp_sent is None or ref_sent is None:
                continue
            scores.append(TurnScore(metric, baselines.bertscore(hyp_sent, ref_sent).f1, orientation))
        if not scores:
            raise DataError("no aligned sentences to score")
        return scores

    # text metrics
    with open(system.hypothesis_text, encoding="utf-8") as fh:
        hyp_lines = fh.read().splitlines()
    ref_lines = shared.ref_pairs_text
    if len(hyp_lines) != len(ref_lines):
        raise DataError(
            f"line count mismatch: {len(hyp_lines)} hypotheses vs {len(ref_lines)} references"
        )
    pairs = [
        baselines.TurnPair.from_text(hyp, ref) for hyp, ref in zip(hyp_lines, ref_lines)
    ]
    if metric == "bleu":
        return [TurnScore(metric, baselines.bleu(pairs, max_n=params.max_n), orientation)]
    if metric == "rouge_l":
        return [TurnScore(metric, baselines.rouge_l(p), orientation) for p in pairs]
    if metric == "average":
        return [
            TurnScore(metric, baselines.embedding_average(p, shared.word_vectors), orientation)
            for p in pairs
        ]
    if metric == "extrema":
        return [
            TurnScore(metric, baselines.vector_extrema(p, shared.word_vectors), orientation)
            for p in pairs
        ]
    if metric == "greedy":
        return [
            TurnScore(metric, baselines.greedy_matching(p, shared.word_vectors), orientation)
            for p in pairs
        ]
    raise DataError(f"unhandled metric {metric!r}")


def _max_workers() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_study(manifest: StudyManifest) -> StudyResult:
    """Score every (system, metric) cell, aggregate, and correlate per aspect."""
    shared = _load_shared(manifest)
    ratings = read_ratings(manifest.ratings)
    ordered = sorted(manifest.systems, key=lambda s: s.system_id)
    n = len(ordered)

    seeds = _system_seeds(manifest.params, n)
    tasks = []
    for system, seed in zip(ordered, seeds):
        for metric in manifest.metrics:
            tasks.append((system, metric, seed))

    results: dict = {}
    errors: list = []

    def run_task(task):
        system, metric, seed = task
        return _score_system_metric(metric, system, shared, manifest.params, seed)

    workers = _max_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda t: _capture(run_task, t), tasks))
    else:
        outcomes = [_capture(run_task, t) for t in tasks]
    for (system, metric, _), outcome in zip(tasks, outcomes):
        if isinstance(outcome, Exception):
            errors.append((system.system_id, metric, str(outcome)))
        else:
            results.setdefault(system.system_id, []).extend(outcome)

    if not results:
        raise DataError("every (system, metric) evaluation failed")
    scores = aggregate_system_scores(results)

    aspects = manifest.aspects if manifest.aspects is not None else tuple(ratings.aspects())
    if not aspects:
        raise DataError("ratings file declares no aspects")
    reports = [correlate(scores, ratings, aspect) for aspect in aspects]
    return StudyResult(
        scores=scores,
        report=merge_reports(reports),
        errors=tuple(sorted(errors)),
        ratings=ratings,
    )


def _capture(fn, task):
    try:
        return fn(task)
    except DistMetricError as exc:
        return exc


def audit_csv(result: StudyResult) -> str:
    """Score table CSV with one ERR row per failed (system, metric) cell."""
    lines = ["system_id,metric,value,orientation"]
    entries = {(e.system_id, e.metric): e for e in result.scores.entries}
    err_cells = {(s, m) for s, m, _ in result.errors}
    keys = sorted(set(entries) | err_cells)
    for key in keys:
        if key in entries:
            e = entries[key]
            lines.append(f"{e.system_id},{e.metric},{e.value!r},{e.orientation}")
        else:
            lines.append(f"{key[0]},{key[1]},ERR,")
    return "\n".join(lines) + "\n"
