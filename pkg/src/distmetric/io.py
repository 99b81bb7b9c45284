"""Readers and writers for every on-disk format the pipeline touches.

Formats:

* Embedding sets: NPY files (little-endian float32 or float64, C-order,
  shape ``(N, D)``). Round-trips are bit-exact.
* Token-embedding archives: one directory per corpus side holding an
  ``index.json`` plus a packed little-endian float32 blob; the index lists
  one ``{file, rows, offset}`` entry per sentence (``null`` marks a sentence
  that was skipped upstream).
* Word-vector tables: UTF-8 text, ``token v1 ... vD`` per line, with an
  optional auto-detected ``count dim`` header line.
* Human ratings: UTF-8 CSV with header ``system_id,sample_id,aspect,score``.

Every reader validates at this boundary so downstream code can assume
consistent shapes and finite values.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, FormatError, IoError

_FLOAT_DTYPES = (np.float32, np.float64)


def _first_bad_row(data: np.ndarray) -> int | None:
    bad = ~np.isfinite(data)
    if not bad.any():
        return None
    return int(np.nonzero(bad.any(axis=tuple(range(1, data.ndim))))[0][0])


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    """An N x D matrix of sentence-pair embeddings with provenance labels."""

    data: np.ndarray
    system_id: str = ""
    source: str = "synthetic"

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise DataError(f"embedding matrix must be 2-d, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise DataError(f"embedding matrix must be non-empty, got shape {data.shape}")
        if data.dtype not in _FLOAT_DTYPES:
            raise DataError(f"embedding dtype must be float32 or float64, got {data.dtype}")
        row = _first_bad_row(data)
        if row is not None:
            raise DataError(f"non-finite embedding value at row {row}")
        object.__setattr__(self, "data", data)

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def read_embedding_set(path: str | os.PathLike, system_id: str = "") -> EmbeddingSet:
    """Read an NPY embedding file, validating shape, dtype and finiteness."""
    path = Path(path)
    if not path.is_file():
        raise IoError(f"no such file: {path}")
    try:
        with open(path, "rb") as fh:
            arr = np.load(fh, allow_pickle=False)
    except OSError as exc:
        raise IoError(f"{path}: read failed: {exc}") from exc
    except Exception as exc:
        # numpy's header parser can leak assorted exception types on
        # corrupted headers (ValueError, EOFError, tokenize.TokenError, ...)
        raise FormatError(f"{path}: not a valid embedding file: {exc}") from exc
    if arr.ndim != 2:
        raise FormatError(f"{path}: expected a 2-d (N, D) array, got shape {arr.shape}")
    if arr.dtype.byteorder == ">":
        raise FormatError(f"{path}: big-endian data is not supported")
    if arr.dtype not in _FLOAT_DTYPES:
        raise FormatError(f"{path}: unsupported dtype {arr.dtype}, expected float32/float64")
    if arr.shape[0] == 0:
        raise DataError(f"{path}: embedding file has zero rows")
    if arr.shape[1] == 0:
        raise DataError(f"{path}: embedding file has zero columns")
    row = _first_bad_row(arr)
    if row is not None:
        raise DataError(f"{path}: non-finite embedding value at row {row}")
    return EmbeddingSet(np.ascontiguousarray(arr), system_id=system_id, source=str(path))


def write_embedding_set(emb: EmbeddingSet, path: str | os.PathLike) -> None:
    """Write an embedding set as an NPY file; read_embedding_set round-trips bitwise."""
    try:
        with open(path, "wb") as fh:
            np.lib.format.write_array(
                fh, np.ascontiguousarray(emb.data), version=(1, 0), allow_pickle=False
            )
    except OSError as exc:
        raise IoError(f"{path}: write failed: {exc}") from exc


@dataclass(frozen=True, eq=False)
class TokenEmbeddingArchive:
    """Per-sentence token-embedding matrices; ``None`` marks a skipped sentence."""

    sentences: tuple
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise DataError(f"archive dimension must be >= 1, got {self.dim}")
        for i, sent in enumerate(self.sentences):
            if sent is None:
                continue
            if sent.ndim != 2 or sent.shape[1] != self.dim:
                raise DataError(f"sentence {i}: expected shape (L, {self.dim}), got {sent.shape}")
            if sent.shape[0] < 1:
                raise DataError(f"sentence {i}: must have at least one token row")
            if not np.isfinite(sent).all():
                raise DataError(f"sentence {i}: non-finite token embedding")

    def __len__(self) -> int:
        return len(self.sentences)


_ARCHIVE_INDEX = "index.json"
_ARCHIVE_BLOB = "embeddings.bin"


def write_token_archive(
    sentences: Sequence[np.ndarray | None], directory: str | os.PathLike
) -> None:
    """Write sentence matrices as a float32 blob plus index.json into ``directory``."""
    directory = Path(directory)
    dim = None
    converted: list[np.ndarray | None] = []
    for i, sent in enumerate(sentences):
        if sent is None:
            converted.append(None)
            continue
        sent = np.asarray(sent)
        if sent.ndim != 2 or sent.shape[0] < 1:
            raise DataError(f"sentence {i}: expected a non-empty (L, D) matrix, got shape {sent.shape}")
        if not np.isfinite(sent).all():
            raise DataError(f"sentence {i}: non-finite token embedding")
        sent32 = np.ascontiguousarray(sent, dtype="<f4")
        if not np.isfinite(sent32).all():
            raise DataError(f"sentence {i}: value overflows float32")
        if dim is None:
            dim = sent32.shape[1]
        elif sent32.shape[1] != dim:
            raise DataError(f"sentence {i}: dimension {sent32.shape[1]} != {dim}")
        converted.append(sent32)
    if dim is None:
        raise DataError("archive must contain at least one non-empty sentence")

    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    offset = 0
    try:
        with open(directory / _ARCHIVE_BLOB, "wb") as blob:
            for sent in converted:
                if sent is None:
                    entries.append(None)
                    continue
                blob.write(sent.tobytes(order="C"))
                entries.append({"file": _ARCHIVE_BLOB, "rows": int(sent.shape[0]), "offset": offset})
                offset += int(sent.shape[0])
        index = {
            "format": "token-embedding-archive",
            "version": 1,
            "dtype": "<f4",
            "dim": int(dim),
            "sentences": entries,
        }
        with open(directory / _ARCHIVE_INDEX, "w", encoding="utf-8") as fh:
            json.dump(index, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"{directory}: write failed: {exc}") from exc


def read_token_archive(directory: str | os.PathLike) -> TokenEmbeddingArchive:
    """Read a token-embedding archive directory written by :func:`write_token_archive`."""
    directory = Path(directory)
    index_path = directory / _ARCHIVE_INDEX
    if not index_path.is_file():
        raise IoError(f"no such archive index: {index_path}")
    try:
        with open(index_path, encoding="utf-8") as fh:
            index = json.load(fh)
    except OSError as exc:
        raise IoError(f"{index_path}: read failed: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{index_path}: invalid JSON: {exc}") from exc

    if not isinstance(index, dict) or index.get("format") != "token-embedding-archive":
        raise FormatError(f"{index_path}: not a token-embedding archive index")
    try:
        dim = int(index["dim"])
        entries = index["sentences"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{index_path}: missing or malformed fields: {exc}") from exc
    if dim < 1:
        raise FormatError(f"{index_path}: dimension must be >= 1, got {dim}")
    if not isinstance(entries, list):
        raise FormatError(f"{index_path}: 'sentences' must be a list")

    blobs: dict[str, np.ndarray] = {}
    sentences: list[np.ndarray | None] = []
    for i, entry in enumerate(entries):
        if entry is None:
            sentences.append(None)
            continue
        if not isinstance(entry, dict) or not {"file", "rows", "offset"} <= set(entry):
            raise FormatError(f"{index_path}: sentence {i}: malformed entry")
        name, rows, offset = entry["file"], entry["rows"], entry["offset"]
        if not isinstance(rows, int) or not isinstance(offset, int) or rows < 1 or offset < 0:
            raise FormatError(f"{index_path}: sentence {i}: bad rows/offset")
        if name not in blobs:
            blob_path = directory / name
            if not blob_path.is_file():
                raise IoError(f"no such blob file: {blob_path}")
            raw = np.fromfile(blob_path, dtype="<f4")
            if raw.size % dim != 0:
                raise FormatError(f"{blob_path}: blob size is not a multiple of dim {dim}")
            blobs[name] = raw.reshape(-1, dim)
        blob = blobs[name]
        if offset + rows > blob.shape[0]:
            raise FormatError(f"{index_path}: sentence {i}: entry exceeds blob size")
        sent = blob[offset : offset + rows]
        if not np.isfinite(sent).all():
            raise DataError(f"{directory}: sentence {i}: non-finite token embedding")
        sentences.append(sent)
    return TokenEmbeddingArchive(sentences=tuple(sentences), dim=dim)


@dataclass(frozen=True, eq=False)
class WordVectorTable:
    """Static word vectors sharing one dimension; lookups are by exact token."""

    vectors: dict
    dim: int

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def get(self, token: str):
        return self.vectors.get(token)

    def __len__(self) -> int:
        return len(self.vectors)


def read_word_vectors(path: str | os.PathLike) -> WordVectorTable:
    """Parse a text word-vector table; a leading ``count dim`` header is auto-detected."""
    path = Path(path)
    if not path.is_file():
        raise IoError(f"no such file: {path}")
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    declared: tuple[int, int] | None = None
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                parts = line.split()
                if not parts:
                    continue
                if lineno == 1 and len(parts) == 2:
                    try:
                        declared = (int(parts[0]), int(parts[1]))
                        continue
                    except ValueError:
                        pass
                token, fields = parts[0], parts[1:]
                if not fields:
                    raise FormatError(f"{path}:{lineno}: no vector components")
                try:
                    vec = np.array([float(v) for v in fields], dtype=np.float64)
                except ValueError as exc:
                    raise FormatError(f"{path}:{lineno}: unparsable component: {exc}") from exc
                if dim is None:
                    dim = vec.size
                elif vec.size != dim:
                    raise FormatError(f"{path}:{lineno}: dimension {vec.size} != {dim}")
                if not np.isfinite(vec).all():
                    raise DataError(f"{path}:{lineno}: non-finite vector component")
                if token in vectors:
                    raise DataError(f"{path}:{lineno}: duplicate token {token!r}")
                vectors[token] = vec
    except OSError as exc:
        raise IoError(f"{path}: read failed: {exc}") from exc
    if dim is None:
        raise DataError(f"{path}: no word vectors found")
    if declared is not None and declared[1] != dim:
        raise FormatError(f"{path}: header declares dim {declared[1]} but lines have {dim}")
    return WordVectorTable(vectors=vectors, dim=dim)


@dataclass(frozen=True)
class RatingRow:
    system_id: str
    sample_id: str
    aspect: str
    score: float


@dataclass(frozen=True, eq=False)
class RatingsTable:
    """Human ratings keyed by (system, sample, aspect)."""

    rows: tuple = field(default_factory=tuple)

    def __post_init__(self):
        seen = set()
        for row in self.rows:
            key = (row.system_id, row.sample_id, row.aspect)
            if key in seen:
                raise DataError(f"duplicate rating for {key}")
            seen.add(key)
            if not math.isfinite(row.score):
                raise DataError(f"non-finite score for {key}")

    def aspects(self) -> list[str]:
        return sorted({r.aspect for r in self.rows})

    def systems(self) -> list[str]:
        return sorted({r.system_id for r in self.rows})

    def mean_by_system(self, aspect: str) -> dict[str, float]:
        sums: dict[str, float] = {}
        counts: dict[str, int] = {}
        for row in self.rows:
            if row.aspect != aspect:
                continue
            sums[row.system_id] = sums.get(row.system_id, 0.0) + row.score
            counts[row.system_id] = counts.get(row.system_id, 0) + 1
        return {s: sums[s] / counts[s] for s in sums}


_RATINGS_HEADER = ["system_id", "sample_id", "aspect", "score"]


def read_ratings(path: str | os.PathLike) -> RatingsTable:
    """Read a ratings CSV with header ``system_id,sample_id,aspect,score``."""
    path = Path(path)
    if not path.is_file():
        raise IoError(f"no such file: {path}")
    rows: list[RatingRow] = []
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise FormatError(f"{path}: empty ratings file") from None
            if [h.strip() for h in header] != _RATINGS_HEADER:
                raise FormatError(
                    f"{path}: expected header {','.join(_RATINGS_HEADER)!r}, got {','.join(header)!r}"
                )
            for record in reader:
                if not record:
                    continue
                if len(record) != 4:
                    raise FormatError(f"{path}:{reader.line_num}: expected 4 fields, got {len(record)}")
                system_id, sample_id, aspect, score_text = (f.strip() for f in record)
                try:
                    score = float(score_text)
                except ValueError:
                    raise FormatError(
                        f"{path}:{reader.line_num}: unparsable score {score_text!r}"
                    ) from None
                if not math.isfinite(score):
                    raise DataError(f"{path}:{reader.line_num}: non-finite score")
                rows.append(RatingRow(system_id, sample_id, aspect, score))
    except OSError as exc:
        raise IoError(f"{path}: read failed: {exc}") from exc
    return RatingsTable(rows=tuple(rows))
