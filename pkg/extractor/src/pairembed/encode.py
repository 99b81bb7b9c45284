"""Encode query-response pairs and raw sentences with a pre-trained encoder.

A pair is fed to the model as its native two-segment input (query as
segment A, response as segment B); the pair representation is the final
hidden state at the first position (the [CLS]/BOS token).  The encoder is
used frozen, in eval mode, with no gradient tracking, so repeated runs with
identical settings produce identical bytes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PairRecord:
    query: str
    response: str


def read_pair_corpus(path) -> list[PairRecord]:
    """Read a TSV with one ``query TAB response`` per line."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                raise ValueError(f"{path}:{lineno}: blank line in pair corpus")
            if "\t" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'query<TAB>response'")
            query, response = line.split("\t", 1)
            query, response = query.strip(), response.strip()
            if not query or not response:
                raise ValueError(f"{path}:{lineno}: empty query or response")
            records.append(PairRecord(query=query, response=response))
    if not records:
        raise ValueError(f"{path}: no pairs found")
    return records


def load_encoder(model_name: str):
    """Load tokenizer and frozen model; any failure aborts the run."""
    tokenizer = AutoTokenizer.from_pretrained(model_name)
    model = AutoModel.from_pretrained(model_name)
    model.eval()
    return tokenizer, model


def _max_length(tokenizer, model) -> int:
    limit = getattr(tokenizer, "model_max_length", None)
    if limit is None or limit > 100_000:  # sentinel for "unset"
        limit = int(getattr(model.config, "max_position_embeddings", 512))
    return int(limit)


def encode_pairs(
    records: list[PairRecord],
    tokenizer,
    model,
    *,
    batch_size: int = 32,
) -> np.ndarray:
    """One float32 row per pair, in corpus order: the final [CLS] hidden state.

    Pairs longer than the model maximum are truncated (longest side first)
    with a logged warning; a row is still produced for them.
    """
    max_len = _max_length(tokenizer, model)
    rows = []
    truncated = 0
    with torch.no_grad():
        for start in range(0, len(records), batch_size):
            batch = records[start : start + batch_size]
            queries = [r.query for r in batch]
            responses = [r.response for r in batch]
            full = tokenizer(queries, responses, truncation=False, padding=False)
            over = [i for i, ids in enumerate(full["input_ids"]) if len(ids) > max_len]
            for i in over:
                truncated += 1
                logger.warning(
                    "pair %d exceeds model maximum (%d tokens > %d), truncating",
                    start + i,
                    len(full["input_ids"][i]),
                    max_len,
                )
            enc = tokenizer(
                queries,
                responses,
                truncation="longest_first",
                max_length=max_len,
                padding=True,
                return_tensors="pt",
            )
            out = model(**enc)
            rows.append(out.last_hidden_state[:, 0, :].to(torch.float32).numpy())
    if truncated:
        logger.warning("%d of %d pairs were truncated", truncated, len(records))
    return np.vstack(rows)


def read_sentences(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


def encode_tokens(
    sentences: list[str],
    tokenizer,
    model,
    *,
    batch_size: int = 32,
) -> list[np.ndarray | None]:
    """Per-sentence final-layer token matrices, special tokens dropped.

    Empty lines are skipped with a warning and yield ``None`` so the
    archive index records the gap and line alignment survives.
    """
    max_len = _max_length(tokenizer, model)
    keep = [i for i, s in enumerate(sentences) if s.strip()]
    for i, sentence in enumerate(sentences):
        if not sentence.strip():
            logger.warning("line %d is empty, skipping (gap recorded in index)", i + 1)
    out: list[np.ndarray | None] = [None] * len(sentences)
    with torch.no_grad():
        for start in range(0, len(keep), batch_size):
            idx = keep[start : start + batch_size]
            enc = tokenizer(
                [sentences[i] for i in idx],
                truncation=True,
                max_length=max_len,
                padding=True,
                return_tensors="pt",
                return_special_tokens_mask=True,
            )
            special = enc.pop("special_tokens_mask")
            hidden = model(**enc).last_hidden_state.to(torch.float32)
            for row, i in enumerate(idx):
                mask = (enc["attention_mask"][row] == 1) & (special[row] == 0)
                matrix = hidden[row][mask].numpy()
                if matrix.shape[0] == 0:
                    logger.warning("line %d has no content tokens, skipping", i + 1)
                    continue
                out[i] = matrix
    return out
