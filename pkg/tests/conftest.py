import json

import numpy as np
import pytest

from distmetric import EmbeddingSet, write_embedding_set


@pytest.fixture
def rng():
    return np.random.default_rng(20210604)


def random_embedding_set(rng, n, d, scale=1.0, dtype=np.float32, system_id=""):
    data = (rng.normal(size=(n, d)) * scale).astype(dtype)
    return EmbeddingSet(data, system_id=system_id)


@pytest.fixture
def make_embeddings(rng):
    def _make(n, d, scale=1.0, dtype=np.float32, system_id=""):
        return random_embedding_set(rng, n, d, scale=scale, dtype=dtype, system_id=system_id)

    return _make


def build_synthetic_study(
    tmp_path,
    *,
    n_systems=5,
    n=600,
    d=8,
    metrics=("fbd", "prd"),
    params=None,
    seed=77,
):
    """Write a self-contained study: real embeddings, noisy systems, ratings.

    System quality decreases with index (more noise), ratings decrease the
    same way, so a metric that tracks distributional distance should reach
    Spearman 1.0 after orientation.
    """
    rng = np.random.default_rng(seed)
    real = rng.normal(size=(n, d))
    write_embedding_set(EmbeddingSet(real.astype(np.float32)), tmp_path / "real.npy")

    noise_scales = np.linspace(0.1, 2.0, n_systems)
    systems = []
    ratings_lines = ["system_id,sample_id,aspect,score"]
    for i, sigma in enumerate(noise_scales):
        system_id = f"sys{i}"
        gen = real + sigma * rng.normal(size=(n, d))
        emb_path = tmp_path / f"{system_id}.npy"
        write_embedding_set(EmbeddingSet(gen.astype(np.float32)), emb_path)
        systems.append({"system_id": system_id, "embeddings": emb_path.name})
        rating = 5.0 - i  # better systems (less noise) rate higher
        for q in range(3):
            ratings_lines.append(f"{system_id},q{q},overall,{rating}")
    ratings_path = tmp_path / "ratings.csv"
    ratings_path.write_text("\n".join(ratings_lines) + "\n", encoding="utf-8")

    manifest = {
        "real_embeddings": "real.npy",
        "ratings": "ratings.csv",
        "systems": systems,
        "metrics": list(metrics),
        "params": params or {"k": 8, "m": 201, "runs": 3, "seed": 1234},
    }
    manifest_path = tmp_path / "study.json"
    manifest_path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return manifest_path
