"""Precision-recall comparison of two embedding distributions.

Both clouds are discretized over one shared finite state space: k-means
clusters fitted on the union of the two sets.  Per-cluster mass fractions
give two histograms R and G; the precision/recall functionals at trade-off
slope lambda are

    alpha(lambda) = sum_v min(lambda * R(v), G(v))
    beta(lambda)  = sum_v min(R(v), G(v) / lambda)

evaluated over the angular grid lambda_i = tan(i / (m+1) * pi/2), i = 1..m.
The reported scalar is the maximum F1 = 2*alpha*beta/(alpha+beta) over the
grid (higher is better).

The grid is closed under lambda -> 1/lambda, and the upper half is evaluated
by swapping the roles of R and G at the mirrored lower-half slope.  That
makes the multiset of F1 values literally identical when R and G are
exchanged, so the max-F1 summary is exactly symmetric in floating point,
not just up to round-off.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DomainError, InsufficientData
from .io import EmbeddingSet
from .registry import DEFAULT_SEED

_MASS_ATOL = 1e-9

DEFAULT_CLUSTERS = 20
DEFAULT_ANGLES = 1001
DEFAULT_RUNS = 10
_KMEANS_MAX_ITER = 500
_KMEANS_TOL = 1e-6


class ClusteringConvergenceWarning(UserWarning):
    """k-means stopped at the iteration cap before centers settled."""


@dataclass(frozen=True, eq=False)
class HistogramPair:
    """Two mass histograms over a shared state space of K >= 2 clusters."""

    r_mass: np.ndarray
    g_mass: np.ndarray
    assignments_r: np.ndarray | None = None
    assignments_g: np.ndarray | None = None
    converged: bool = True

    def __post_init__(self):
        r = np.asarray(self.r_mass, dtype=np.float64)
        g = np.asarray(self.g_mass, dtype=np.float64)
        if r.ndim != 1 or g.ndim != 1 or r.size != g.size:
            raise DomainError(
                f"mass vectors must be 1-d and equal length, got {r.shape} and {g.shape}"
            )
        if r.size < 2:
            raise DomainError(f"state space must have K >= 2, got K={r.size}")
        for name, mass in (("r_mass", r), ("g_mass", g)):
            if (mass < 0).any():
                raise DataError(f"{name} has a negative entry")
            total = float(mass.sum())
            if abs(total - 1.0) > _MASS_ATOL:
                raise DataError(f"{name} sums to {total!r}, expected 1 within {_MASS_ATOL}")
        object.__setattr__(self, "r_mass", r)
        object.__setattr__(self, "g_mass", g)

    @property
    def k(self) -> int:
        return self.r_mass.size

    def swapped(self) -> "HistogramPair":
        return HistogramPair(
            r_mass=self.g_mass,
            g_mass=self.r_mass,
            assignments_r=self.assignments_g,
            assignments_g=self.assignments_r,
            converged=self.converged,
        )


def _squared_distances(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # (n, k) matrix of squared Euclidean distances, clipped for round-off.
    sq = (
        np.einsum("ij,ij->i", x, x)[:, None]
        - 2.0 * (x @ centers.T)
        + np.einsum("ij,ij->i", centers, centers)[None, :]
    )
    return np.clip(sq, 0.0, None)


def _kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centers[0] = x[first]
    min_d2 = _squared_distances(x, centers[:1])[:, 0]
    for j in range(1, k):
        total = float(min_d2.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=min_d2 / total))
        centers[j] = x[idx]
        d2_new = _squared_distances(x, centers[j : j + 1])[:, 0]
        min_d2 = np.minimum(min_d2, d2_new)
    return centers


def _lloyd(
    x: np.ndarray, k: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, bool]:
    centers = _kmeans_pp_init(x, k, rng)
    labels = np.zeros(x.shape[0], dtype=np.intp)
    converged = False
    for _ in range(_KMEANS_MAX_ITER):
        d2 = _squared_distances(x, centers)
        labels = d2.argmin(axis=1)
        new_centers = np.empty_like(centers)
        counts = np.bincount(labels, minlength=k)
        for j in range(k):
            if counts[j] > 0:
                new_centers[j] = x[labels == j].mean(axis=0)
        empty = np.nonzero(counts == 0)[0]
        if empty.size:
            # Relocate each empty cluster to the point currently worst served.
            worst = np.argsort(d2[np.arange(x.shape[0]), labels])[::-1]
            for slot, j in enumerate(empty):
                new_centers[j] = x[worst[slot]]
        shift = float(np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max())
        centers = new_centers
        if shift <= _KMEANS_TOL:
            converged = True
            break
    d2 = _squared_distances(x, centers)
    labels = d2.argmin(axis=1)
    return centers, labels, converged


def discretize(real: EmbeddingSet, gen: EmbeddingSet, k: int, seed: int) -> HistogramPair:
    """Cluster the union of both sets into k bins and return per-set mass fractions.

    Deterministic given ``seed``.  If Lloyd iteration hits the cap without
    the centers settling, the best-so-far assignment is returned with
    ``converged=False`` and a :class:`ClusteringConvergenceWarning`.
    """
    if k < 2:
        raise DomainError(f"need at least 2 clusters, got k={k}")
    if real.dim != gen.dim:
        raise DomainError(f"dimension mismatch: {real.dim} != {gen.dim}")
    if real.count < k or gen.count < k:
        raise InsufficientData(
            f"both sets need >= k samples: N_r={real.count}, N_g={gen.count}, k={k}"
        )
    x = np.vstack(
        [real.data.astype(np.float64, copy=False), gen.data.astype(np.float64, copy=False)]
    )
    rng = np.random.default_rng(seed)
    _, labels, converged = _lloyd(x, k, rng)
    if not converged:
        warnings.warn(
            f"k-means did not converge within {_KMEANS_MAX_ITER} iterations",
            ClusteringConvergenceWarning,
            stacklevel=2,
        )
    labels_r = labels[: real.count]
    labels_g = labels[real.count :]
    r_mass = np.bincount(labels_r, minlength=k) / real.count
    g_mass = np.bincount(labels_g, minlength=k) / gen.count
    return HistogramPair(
        r_mass=r_mass,
        g_mass=g_mass,
        assignments_r=labels_r,
        assignments_g=labels_g,
        converged=converged,
    )


@dataclass(frozen=True, eq=False)
class PrdCurve:
    """Precision/recall over the angular slope grid plus the max-F1 summary."""

    lambdas: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    max_f1: float

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=np.float64)
        pre = np.asarray(self.precision, dtype=np.float64)
        rec = np.asarray(self.recall, dtype=np.float64)
        if not (lam.shape == pre.shape == rec.shape) or lam.ndim != 1 or lam.size < 1:
            raise DomainError("lambdas, precision, recall must be equal-length 1-d arrays")
        if (np.diff(lam) <= 0).any():
            raise DomainError("lambda grid must be strictly increasing")
        for name, values in (("precision", pre), ("recall", rec)):
            if ((values < 0.0) | (values > 1.0)).any():
                raise DataError(f"{name} values must lie in [0, 1]")
        if not 0.0 <= self.max_f1 <= 1.0:
            raise DataError(f"max_f1 must lie in [0, 1], got {self.max_f1}")
        if self.max_f1 != float(_f1(pre, rec).max()):
            raise DataError("max_f1 does not equal the grid maximum of 2ab/(a+b)")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "precision", pre)
        object.__setattr__(self, "recall", rec)

    @property
    def m(self) -> int:
        return self.lambdas.size


def _f1(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    denom = alpha + beta
    out = np.zeros_like(denom)
    nz = denom > 0
    out[nz] = 2.0 * alpha[nz] * beta[nz] / denom[nz]
    return out


def _alpha_beta(r: np.ndarray, g: np.ndarray, lam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    alpha = np.minimum(lam[:, None] * r[None, :], g[None, :]).sum(axis=1)
    beta = np.minimum(r[None, :], g[None, :] / lam[:, None]).sum(axis=1)
    return alpha, beta


def prd_curve(hist: HistogramPair, m: int = DEFAULT_ANGLES) -> PrdCurve:
    """Evaluate precision/recall over m angular slopes and summarize with max F1."""
    if m < 1:
        raise DomainError(f"angular resolution must be >= 1, got m={m}")
    r, g = hist.r_mass, hist.g_mass

    half = (m + 1) // 2  # lower-half slope count, middle included when m is odd
    angles = np.arange(1, half + 1, dtype=np.float64) * (np.pi / (2.0 * (m + 1)))
    lam_low = np.tan(angles)
    if m % 2 == 1:
        lam_low[-1] = 1.0  # exact midpoint of the reciprocal-closed grid

    lambdas = np.empty(m)
    alpha = np.empty(m)
    beta = np.empty(m)

    alpha[:half], beta[:half] = _alpha_beta(r, g, lam_low)
    lambdas[:half] = lam_low

    n_upper = m - half
    if n_upper:
        lam_mirror = lam_low[:n_upper]
        a_sw, b_sw = _alpha_beta(g, r, lam_mirror)
        # The swapped evaluation at slope L is the original pair at 1/L with
        # precision and recall exchanged; reverse to keep lambdas increasing.
        alpha[half:] = b_sw[::-1]
        beta[half:] = a_sw[::-1]
        lambdas[half:] = (1.0 / lam_mirror)[::-1]

    alpha = np.clip(alpha, 0.0, 1.0)
    beta = np.clip(beta, 0.0, 1.0)
    max_f1 = float(_f1(alpha, beta).max())
    return PrdCurve(lambdas=lambdas, precision=alpha, recall=beta, max_f1=max_f1)


def _derive_seeds(seed: int, runs: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(runs)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]


def prd_run_curves(
    real: EmbeddingSet,
    gen: EmbeddingSet,
    *,
    k: int = DEFAULT_CLUSTERS,
    m: int = DEFAULT_ANGLES,
    runs: int = DEFAULT_RUNS,
    seed: int = DEFAULT_SEED,
) -> list[PrdCurve]:
    """One PRD curve per clustering run, seeds split deterministically from ``seed``."""
    if runs < 1:
        raise DomainError(f"runs must be >= 1, got {runs}")
    curves = []
    for run_seed in _derive_seeds(seed, runs):
        hist = discretize(real, gen, k, run_seed)
        curves.append(prd_curve(hist, m))
    return curves


def aggregate_curves(curves) -> PrdCurve:
    """Pointwise-mean curve over runs; max_f1 is recomputed on the mean curve."""
    if not curves:
        raise DomainError("no curves to aggregate")
    alpha = np.mean([c.precision for c in curves], axis=0)
    beta = np.mean([c.recall for c in curves], axis=0)
    max_f1 = float(_f1(alpha, beta).max())
    return PrdCurve(lambdas=curves[0].lambdas, precision=alpha, recall=beta, max_f1=max_f1)


def prd_from_sets(
    real: EmbeddingSet,
    gen: EmbeddingSet,
    *,
    k: int = DEFAULT_CLUSTERS,
    m: int = DEFAULT_ANGLES,
    runs: int = DEFAULT_RUNS,
    seed: int = DEFAULT_SEED,
) -> PrdCurve:
    """Cluster, evaluate, and average over ``runs`` seeded clusterings."""
    return aggregate_curves(prd_run_curves(real, gen, k=k, m=m, runs=runs, seed=seed))


def write_prd_curve(curve: PrdCurve, path) -> None:
    """Dump a curve as CSV (``lambda,precision,recall``); floats use repr precision."""
    lines = ["lambda,precision,recall"]
    for lam, pre, rec in zip(curve.lambdas, curve.precision, curve.recall):
        lines.append(f"{float(lam)!r},{float(pre)!r},{float(rec)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
