"""Writers for the embedding formats the evaluation pipeline consumes.

Deliberately self-contained: the extractor couples to the pipeline only
through these on-disk formats (NPY matrices and token-embedding archive
directories), never through its code.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

ARCHIVE_INDEX = "index.json"
ARCHIVE_BLOB = "embeddings.bin"


def write_matrix(array: np.ndarray, path: str | os.PathLike) -> None:
    """Atomically write a 2-d float32 matrix as NPY v1.0."""
    array = np.ascontiguousarray(array, dtype="<f4")
    if array.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {array.shape}")
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.lib.format.write_array(fh, array, version=(1, 0), allow_pickle=False)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def write_token_archive(
    sentences: Sequence[np.ndarray | None], directory: str | os.PathLike
) -> None:
    """Write per-sentence token matrices as one float32 blob plus index.json.

    ``None`` entries mark sentences that were skipped upstream; the index
    records them as ``null`` so consumers can keep line alignment.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    dim = None
    entries = []
    offset = 0
    with open(directory / ARCHIVE_BLOB, "wb") as blob:
        for i, sent in enumerate(sentences):
            if sent is None:
                entries.append(None)
                continue
            sent = np.ascontiguousarray(sent, dtype="<f4")
            if sent.ndim != 2 or sent.shape[0] < 1:
                raise ValueError(f"sentence {i}: expected a non-empty (L, D) matrix")
            if dim is None:
                dim = int(sent.shape[1])
            elif sent.shape[1] != dim:
                raise ValueError(f"sentence {i}: dimension {sent.shape[1]} != {dim}")
            blob.write(sent.tobytes(order="C"))
            entries.append({"file": ARCHIVE_BLOB, "rows": int(sent.shape[0]), "offset": offset})
            offset += int(sent.shape[0])
    if dim is None:
        raise ValueError("archive needs at least one non-empty sentence")
    index = {
        "format": "token-embedding-archive",
        "version": 1,
        "dtype": "<f4",
        "dim": dim,
        "sentences": entries,
    }
    with open(directory / ARCHIVE_INDEX, "w", encoding="utf-8") as fh:
        json.dump(index, fh, indent=2, sort_keys=True)
        fh.write("\n")
