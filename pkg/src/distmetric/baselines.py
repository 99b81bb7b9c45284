"""Turn-level baseline metrics: BLEU, ROUGE-L, and embedding similarities.

All metrics work on whitespace-tokenized, lowercased tokens with surrounding
punctuation stripped (see :func:`tokenize`); tokenization is deliberately
simple so results are bit-reproducible.  BLEU is corpus-level; the others
score one (hypothesis, reference) pair and are averaged to system level by
the harness.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CoverageError, DataError, DomainError, IoError
from .io import WordVectorTable

BLEU_EPSILON = 1e-9
ROUGE_BETA = 1.2


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _strip_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and _is_punct(token[start]):
        start += 1
    while end > start and _is_punct(token[end - 1]):
        end -= 1
    return token[start:end]


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase, split on Unicode whitespace, strip surrounding punctuation."""
    out = []
    for raw in text.lower().split():
        tok = _strip_punct(raw)
        if tok:
            out.append(tok)
    return tuple(out)


@dataclass(frozen=True)
class TurnPair:
    """One generated response and its reference, as token sequences."""

    hypothesis: tuple
    reference: tuple

    def __post_init__(self):
        if not self.hypothesis:
            raise DataError("hypothesis is empty after tokenization")
        if not self.reference:
            raise DataError("reference is empty after tokenization")

    @classmethod
    def from_text(cls, hypothesis: str, reference: str) -> "TurnPair":
        return cls(hypothesis=tokenize(hypothesis), reference=tokenize(reference))


def read_turn_pairs(hyp_path, ref_path) -> list[TurnPair]:
    """Read line-aligned hypothesis/reference text files into turn pairs."""
    lines = []
    for path in (hyp_path, ref_path):
        path = Path(path)
        if not path.is_file():
            raise IoError(f"no such file: {path}")
        try:
            with open(path, encoding="utf-8") as fh:
                lines.append(fh.read().splitlines())
        except OSError as exc:
            raise IoError(f"{path}: read failed: {exc}") from exc
    hyp_lines, ref_lines = lines
    if len(hyp_lines) != len(ref_lines):
        raise DataError(
            f"line count mismatch: {hyp_path} has {len(hyp_lines)}, {ref_path} has {len(ref_lines)}"
        )
    pairs = []
    for i, (hyp, ref) in enumerate(zip(hyp_lines, ref_lines), start=1):
        try:
            pairs.append(TurnPair.from_text(hyp, ref))
        except DataError as exc:
            raise DataError(f"line {i}: {exc}") from None
    return pairs


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(pairs: Sequence[TurnPair], max_n: int = 4) -> float:
    """Corpus-level BLEU: clipped n-gram precisions, geometric mean, brevity penalty.

    Zero precisions are floored at ``BLEU_EPSILON``; orders with no n-grams
    anywhere in the corpus (every hypothesis shorter than n) are skipped so
    that identical corpora score exactly 1.0.
    """
    if max_n < 1:
        raise DomainError(f"max_n must be >= 1, got {max_n}")
    if not pairs:
        raise DomainError("empty corpus")
    clipped = [0] * max_n
    totals = [0] * max_n
    hyp_len = 0
    ref_len = 0
    for pair in pairs:
        hyp_len += len(pair.hypothesis)
        ref_len += len(pair.reference)
        for n in range(1, max_n + 1):
            hyp_counts = _ngrams(pair.hypothesis, n)
            if not hyp_counts:
                continue
            ref_counts = _ngrams(pair.reference, n)
            totals[n - 1] += sum(hyp_counts.values())
            clipped[n - 1] += sum(
                min(count, ref_counts.get(gram, 0)) for gram, count in hyp_counts.items()
            )
    log_sum = 0.0
    orders = 0
    for n in range(max_n):
        if totals[n] == 0:
            continue
        precision = clipped[n] / totals[n]
        if precision == 0.0:
            precision = BLEU_EPSILON
        log_sum += math.log(precision)
        orders += 1
    if orders == 0:
        raise DomainError("corpus has no n-grams to score")
    geo_mean = math.exp(log_sum / orders)
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return bp * geo_mean


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(pair: TurnPair, beta: float = ROUGE_BETA) -> float:
    """LCS-based F-measure with recall weighted by ``beta``."""
    lcs = _lcs_length(pair.hypothesis, pair.reference)
    if lcs == 0:
        return 0.0
    precision = lcs / len(pair.hypothesis)
    recall = lcs / len(pair.reference)
    b2 = beta * beta
    return (1.0 + b2) * precision * recall / (recall + b2 * precision)


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise DataError("cosine undefined for a zero-norm vector")
    return float(a @ b) / (na * nb)


def _in_vocab_matrix(tokens: Sequence[str], table: WordVectorTable, side: str) -> np.ndarray:
    vecs = [table.get(tok) for tok in tokens]
    vecs = [v for v in vecs if v is not None]
    if not vecs:
        raise CoverageError(f"every {side} token is out of vocabulary")
    return np.stack(vecs)


def embedding_average(pair: TurnPair, table: WordVectorTable) -> float:
    """Cosine between the mean word vectors of the two sides (OOV tokens skipped)."""
    hyp = _in_vocab_matrix(pair.hypothesis, table, "hypothesis").mean(axis=0)
    ref = _in_vocab_matrix(pair.reference, table, "reference").mean(axis=0)
    return _cosine(hyp, ref)


def _extrema_vector(matrix: np.ndarray) -> np.ndarray:
    idx = np.abs(matrix).argmax(axis=0)
    return matrix[idx, np.arange(matrix.shape[1])]


def vector_extrema(pair: TurnPair, table: WordVectorTable) -> float:
    """Cosine between per-dimension most-extreme (largest |value|) word-vector entries."""
    hyp = _extrema_vector(_in_vocab_matrix(pair.hypothesis, table, "hypothesis"))
    ref = _extrema_vector(_in_vocab_matrix(pair.reference, table, "reference"))
    return _cosine(hyp, ref)


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1)
    if (norms == 0).any():
        raise DataError("cosine undefined for a zero-norm vector")
    return matrix / norms[:, None]


def greedy_matching(pair: TurnPair, table: WordVectorTable) -> float:
    """Mean of the two directional greedy word-matching scores."""
    hyp = _unit_rows(_in_vocab_matrix(pair.hypothesis, table, "hypothesis"))
    ref = _unit_rows(_in_vocab_matrix(pair.reference, table, "reference"))
    sims = hyp @ ref.T
    forward = float(sims.max(axis=1).mean())
    backward = float(sims.max(axis=0).mean())
    return (forward + backward) / 2.0


class BertScore(NamedTuple):
    precision: float
    recall: float
    f1: float


def bertscore(hyp_tokens: np.ndarray, ref_tokens: np.ndarray) -> BertScore:
    """Greedy max-cosine matching between contextual token embeddings.

    No idf weighting and no baseline rescaling: precision is the mean over
    hypothesis tokens of the best cosine against the reference tokens,
    recall the mirror image, F1 their harmonic mean.
    """
    hyp = np.asarray(hyp_tokens, dtype=np.float64)
    ref = np.asarray(ref_tokens, dtype=np.float64)
    if hyp.ndim != 2 or ref.ndim != 2:
        raise DomainError("token embeddings must be 2-d (L, D) matrices")
    if hyp.shape[0] < 1 or ref.shape[0] < 1:
        raise DomainError("both sentences must be non-empty")
    if hyp.shape[1] != ref.shape[1]:
        raise DomainError(f"dimension mismatch: {hyp.shape[1]} != {ref.shape[1]}")
    sims = _unit_rows(hyp) @ _unit_rows(ref).T
    precision = float(sims.max(axis=1).mean())
    recall = float(sims.max(axis=0).mean())
    denom = precision + recall
    f1 = 2.0 * precision * recall / denom if denom != 0.0 else 0.0
    return BertScore(precision=precision, recall=recall, f1=f1)
