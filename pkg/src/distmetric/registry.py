"""Registry of supported metrics: category, orientation, aggregation level.

The category drives report ordering, the orientation tells the correlation
harness whether to negate values before comparing against human ratings
(distances are lower-better), and ``turn_level`` says whether system scores
are means of per-turn scores or a single corpus/distribution-level value.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError

DEFAULT_SEED = 20210604

WORD_OVERLAP = "word-overlap"
EMBEDDING_BASED = "embedding-based"
DISTRIBUTION_BASED = "distribution-based"

HIGHER_BETTER = "higher-better"
LOWER_BETTER = "lower-better"

_CATEGORY_RANK = {WORD_OVERLAP: 0, EMBEDDING_BASED: 1, DISTRIBUTION_BASED: 2}


@dataclass(frozen=True)
class MetricInfo:
    name: str
    category: str
    orientation: str
    turn_level: bool


METRICS: dict[str, MetricInfo] = {
    m.name: m
    for m in [
        MetricInfo("bleu", WORD_OVERLAP, HIGHER_BETTER, turn_level=False),
        MetricInfo("rouge_l", WORD_OVERLAP, HIGHER_BETTER, turn_level=True),
        MetricInfo("average", EMBEDDING_BASED, HIGHER_BETTER, turn_level=True),
        MetricInfo("extrema", EMBEDDING_BASED, HIGHER_BETTER, turn_level=True),
        MetricInfo("greedy", EMBEDDING_BASED, HIGHER_BETTER, turn_level=True),
        MetricInfo("bertscore", EMBEDDING_BASED, HIGHER_BETTER, turn_level=True),
        MetricInfo("fbd", DISTRIBUTION_BASED, LOWER_BETTER, turn_level=False),
        MetricInfo("prd", DISTRIBUTION_BASED, HIGHER_BETTER, turn_level=False),
    ]
}


def metric_info(name: str) -> MetricInfo:
    try:
        return METRICS[name]
    except KeyError:
        raise DomainError(f"unknown metric: {name!r}") from None


def category_rank(metric: str) -> int:
    info = METRICS.get(metric)
    if info is None:
        return len(_CATEGORY_RANK)
    return _CATEGORY_RANK[info.category]


def orientation_of(metric: str) -> str:
    info = METRICS.get(metric)
    return info.orientation if info is not None else HIGHER_BETTER
