"""Distribution-wise evaluation of text-generation systems.

Scores a system by the distance between the distribution of its generated
query-response embeddings and the distribution of real-conversation
embeddings (Frechet distance between fitted Gaussians, and a cluster-based
precision-recall max-F1), alongside classic turn-level baselines and a
harness that correlates metric scores with human ratings.
"""

from .baselines import (
    BertScore,
    TurnPair,
    bertscore,
    bleu,
    embedding_average,
    greedy_matching,
    read_turn_pairs,
    rouge_l,
    tokenize,
    vector_extrema,
)
from .errors import (
    CoverageError,
    DataError,
    DistMetricError,
    DomainError,
    FormatError,
    InsufficientData,
    IoError,
    NumericalError,
)
from .frechet import GaussianSummary, fbd, fbd_from_sets, fit_gaussian, sqrtm_psd
from .harness import (
    CorrelationReport,
    CorrelationRow,
    NormalityProfile,
    ScoreEntry,
    ScoreTable,
    ShapiroResult,
    TurnScore,
    aggregate_system_scores,
    correlate,
    merge_reports,
    normality_profile,
    pearson,
    render_report,
    shapiro_wilk,
    spearman,
)
from .io import (
    EmbeddingSet,
    RatingRow,
    RatingsTable,
    TokenEmbeddingArchive,
    WordVectorTable,
    read_embedding_set,
    read_ratings,
    read_token_archive,
    read_word_vectors,
    write_embedding_set,
    write_token_archive,
)
from .prd import (
    HistogramPair,
    PrdCurve,
    aggregate_curves,
    discretize,
    prd_curve,
    prd_from_sets,
    prd_run_curves,
)
from .registry import DEFAULT_SEED, METRICS, MetricInfo
from .study import StudyManifest, StudyResult, load_manifest, run_study

__version__ = "0.1.0"

__all__ = [
    "BertScore",
    "CorrelationReport",
    "CorrelationRow",
    "CoverageError",
    "DEFAULT_SEED",
    "DataError",
    "DistMetricError",
    "DomainError",
    "EmbeddingSet",
    "FormatError",
    "GaussianSummary",
    "HistogramPair",
    "InsufficientData",
    "IoError",
    "METRICS",
    "MetricInfo",
    "NormalityProfile",
    "NumericalError",
    "PrdCurve",
    "RatingRow",
    "RatingsTable",
    "ScoreEntry",
    "ScoreTable",
    "ShapiroResult",
    "StudyManifest",
    "StudyResult",
    "TokenEmbeddingArchive",
    "TurnPair",
    "TurnScore",
    "WordVectorTable",
    "aggregate_curves",
    "aggregate_system_scores",
    "bertscore",
    "bleu",
    "correlate",
    "discretize",
    "embedding_average",
    "fbd",
    "fbd_from_sets",
    "fit_gaussian",
    "greedy_matching",
    "load_manifest",
    "merge_reports",
    "normality_profile",
    "pearson",
    "prd_curve",
    "prd_from_sets",
    "prd_run_curves",
    "read_embedding_set",
    "read_ratings",
    "read_token_archive",
    "read_turn_pairs",
    "read_word_vectors",
    "render_report",
    "rouge_l",
    "run_study",
    "shapiro_wilk",
    "spearman",
    "sqrtm_psd",
    "tokenize",
    "vector_extrema",
    "write_embedding_set",
    "write_token_archive",
]
