"""Gaussian summaries of embedding clouds and the Frechet distance between them.

An embedding set is summarized by its mean vector and sample covariance.  Two
summaries are compared with the closed-form Frechet (2-Wasserstein) distance
between Gaussians,

    ||mu_1 - mu_2||^2 + Tr(C_1 + C_2 - 2 (C_1 C_2)^{1/2}),

which is the FBD score of a generated set against a real set (lower is
better).  The mean term uses the squared norm by default, matching the
convention established for Frechet-style generative-model metrics; the plain
(unsquared) norm is available via ``mean_norm="plain"``.

The matrix square root is computed by symmetric eigendecomposition with
clamping of tiny negative eigenvalues, and the cross term uses the
symmetrized product C_1^{1/2} C_2 C_1^{1/2}, which has the same trace as
(C_1 C_2)^{1/2} but stays symmetric PSD in floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InsufficientData, NumericalError
from .io import EmbeddingSet

_SYM_RTOL = 1e-8
_NEGATIVE_RESIDUE = -1e-6

MEAN_NORMS = ("squared", "plain")
COV_DIVISORS = ("n-1", "n")


def _check_symmetric(a: np.ndarray, what: str) -> None:
    scale = max(1.0, float(np.abs(a).max()))
    asym = float(np.abs(a - a.T).max())
    if asym > _SYM_RTOL * scale:
        raise DomainError(f"{what} is not symmetric: max asymmetry {asym:.3e}")


@dataclass(frozen=True, eq=False)
class GaussianSummary:
    """Mean vector, covariance matrix, and the sample count behind the fit."""

    mean: np.ndarray
    cov: np.ndarray
    n: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.cov, dtype=np.float64)
        if mean.ndim != 1:
            raise DomainError(f"mean must be 1-d, got shape {mean.shape}")
        if cov.shape != (mean.size, mean.size):
            raise DomainError(f"covariance shape {cov.shape} does not match dim {mean.size}")
        if not (np.isfinite(mean).all() and np.isfinite(cov).all()):
            raise DomainError("summary contains non-finite values")
        _check_symmetric(cov, "covariance")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


def fit_gaussian(
    emb: EmbeddingSet, *, divisor: str = "n-1", ridge: float = 0.0
) -> GaussianSummary:
    """Fit mean and sample covariance to an embedding set.

    ``divisor`` selects the covariance normalization: ``"n-1"`` (unbiased,
    default) or ``"n"``.  ``ridge`` adds ``ridge * I`` to the covariance,
    which guards rank-deficient fits when D exceeds N.
    """
    if divisor not in COV_DIVISORS:
        raise DomainError(f"divisor must be one of {COV_DIVISORS}, got {divisor!r}")
    if ridge < 0:
        raise DomainError(f"ridge must be >= 0, got {ridge}")
    n = emb.count
    if n < 2:
        raise InsufficientData(f"covariance needs at least 2 samples, got {n}")
    x = emb.data.astype(np.float64, copy=False)
    mean = x.mean(axis=0)
    centered = x - mean
    denom = n - 1 if divisor == "n-1" else n
    cov = centered.T @ centered / denom
    cov = (cov + cov.T) / 2.0
    if ridge > 0:
        cov = cov + ridge * np.eye(cov.shape[0])
    return GaussianSummary(mean=mean, cov=cov, n=n)


def sqrtm_psd(a: np.ndarray) -> np.ndarray:
    """Symmetric square root of a symmetric PSD matrix.

    Negative eigenvalues (round-off from rank-deficient sample covariances)
    are clamped to zero before taking the root.  The result S is symmetric
    with S @ S recovering the input up to round-off.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise DomainError("matrix contains non-finite values")
    _check_symmetric(a, "matrix")
    sym = (a + a.T) / 2.0
    try:
        eigvals, eigvecs = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    eigvals = np.clip(eigvals, 0.0, None)
    root = (eigvecs * np.sqrt(eigvals)) @ eigvecs.T
    return (root + root.T) / 2.0


def fbd(real: GaussianSummary, gen: GaussianSummary, *, mean_norm: str = "squared") -> float:
    """Frechet distance between two Gaussian summaries; lower is better.

    ``mean_norm="squared"`` (default) uses ||dmu||^2 for the mean term;
    ``"plain"`` uses ||dmu||.  The cross term Tr((C_1 C_2)^{1/2}), equal to
    the trace of the square root of the symmetrized product, is evaluated as
    the nuclear norm of C_1^{1/2} C_2^{1/2}; summing singular values avoids
    the square-root-of-tiny-eigenvalue noise that rank-deficient sample
    covariances otherwise produce.  Small negative round-off is clamped to
    zero.
    """
    if mean_norm not in MEAN_NORMS:
        raise DomainError(f"mean_norm must be one of {MEAN_NORMS}, got {mean_norm!r}")
    if real.dim != gen.dim:
        raise DomainError(f"dimension mismatch: {real.dim} != {gen.dim}")
    delta = real.mean - gen.mean
    mean_term = float(delta @ delta)
    if mean_norm == "plain":
        mean_term = math.sqrt(mean_term)
    root_r = sqrtm_psd(real.cov)
    root_g = sqrtm_psd(gen.cov)
    try:
        cross_trace = float(np.linalg.svd(root_r @ root_g, compute_uv=False).sum())
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular value decomposition failed: {exc}") from exc
    value = mean_term + float(np.trace(real.cov) + np.trace(gen.cov)) - 2.0 * cross_trace
    if value < _NEGATIVE_RESIDUE:
        raise NumericalError(f"distance evaluated to {value:.3e}, beyond round-off tolerance")
    return max(value, 0.0)


def fbd_from_sets(
    real: EmbeddingSet,
    gen: EmbeddingSet,
    *,
    mean_norm: str = "squared",
    divisor: str = "n-1",
    ridge: float = 0.0,
) -> float:
    """Fit Gaussians to both sets and return their Frechet distance."""
    if real.dim != gen.dim:
        raise DomainError(f"dimension mismatch: {real.dim} != {gen.dim}")
    summary_r = fit_gaussian(real, divisor=divisor, ridge=ridge)
    summary_g = fit_gaussian(gen, divisor=divisor, ridge=ridge)
    return fbd(summary_r, summary_g, mean_norm=mean_norm)
