"""Gaussian feature summaries and the Fréchet distance between them.

The distance between two summaries (mu_a, S_a) and (mu_b, S_b) is

    ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2})

with the matrix square root taken through the symmetric product
S_a^{1/2} S_b S_a^{1/2}, which keeps the computation in real symmetric
eigendecompositions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import (
    DimensionMismatchError,
    InsufficientSamplesError,
    NumericalError,
    ValidationError,
)

SCALES = (128, 256, 512, 1024)
TASKS = ("imagenet", "sex", "age", "real-vs-synth")

# Relative eigenvalue floor below which a covariance counts as rank-deficient.
_RANK_TOL = 1e-10
# Negative-eigenvalue tolerance for a matrix to still count as a covariance.
_PSD_TOL = 1e-8


@dataclass(frozen=True)
class FeatureSet:
    """An N x D feature matrix for one (scale, task, dataset) cell."""

    matrix: np.ndarray
    scale: int
    task_id: str
    dataset_id: str

    def __post_init__(self):
        m = np.ascontiguousarray(np.asarray(self.matrix, dtype=np.float64))
        if m.ndim != 2:
            raise ValidationError("feature matrix must be 2-D (samples x dims)")
        if m.shape[0] < 2:
            raise InsufficientSamplesError(
                f"need at least 2 samples, got {m.shape[0]}"
            )
        if m.shape[1] < 1:
            raise ValidationError("feature matrix needs at least one dimension")
        if not np.all(np.isfinite(m)):
            raise ValidationError("feature matrix contains non-finite entries")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def dims(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class GaussianSummary:
    """Mean vector, unbiased sample covariance, and the sample count."""

    mean: np.ndarray
    cov: np.ndarray
    n: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        cov = np.asarray(self.cov, dtype=np.float64)
        if cov.shape != (mean.size, mean.size):
            raise DimensionMismatchError("covariance shape does not match mean")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-10 * max(1.0, float(np.abs(cov).max()))):
            raise ValidationError("covariance must be symmetric")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dims(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class FrechetDetails:
    """Diagnostics for one Fréchet evaluation."""

    regularized: bool
    epsilon: float
    min_eigenvalue: float


def gaussian_summary(f: FeatureSet) -> GaussianSummary:
    """Column means and unbiased (N-1) covariance, symmetrized."""
    m = f.matrix
    if m.shape[0] < 2:
        raise InsufficientSamplesError("need at least 2 samples for a covariance")
    mean = m.mean(axis=0)
    cov = np.cov(m, rowvar=False, ddof=1)
    cov = np.atleast_2d(cov)
    cov = (cov + cov.T) / 2.0
    return GaussianSummary(mean=mean, cov=cov, n=m.shape[0])


def sqrtm_psd(mat: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition, eigenvalues clamped at 0."""
    sym = (mat + mat.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(sym)
    eigvals = np.clip(eigvals, 0.0, None)
    return (eigvecs * np.sqrt(eigvals)) @ eigvecs.T


def _check_psd(eigvals: np.ndarray, what: str) -> None:
    max_abs = float(np.abs(eigvals).max()) if eigvals.size else 0.0
    min_eig = float(eigvals.min()) if eigvals.size else 0.0
    if min_eig < -_PSD_TOL * max(max_abs, 1e-300):
        raise NumericalError(
            f"{what} is not positive semi-definite",
            diagnostics={"min_eigenvalue": min_eig, "max_abs_eigenvalue": max_abs},
        )


def frechet_distance(
    a: GaussianSummary, b: GaussianSummary, return_details: bool = False
):
    """Squared Fréchet (2-Wasserstein) distance between two Gaussian summaries.

    When either covariance is rank-deficient, eps * I with
    eps = 1e-6 * mean(diagonal) is added to both and the result is flagged
    in the returned details.
    """
    if a.dims != b.dims:
        raise DimensionMismatchError(f"dimension mismatch: {a.dims} vs {b.dims}")
    cov_a, cov_b = a.cov, b.cov
    eig_a = np.linalg.eigvalsh((cov_a + cov_a.T) / 2.0)
    eig_b = np.linalg.eigvalsh((cov_b + cov_b.T) / 2.0)
    _check_psd(eig_a, "covariance of first summary")
    _check_psd(eig_b, "covariance of second summary")

    def deficient(eigvals):
        top = float(eigvals.max()) if eigvals.size else 0.0
        return top <= 0.0 or float(eigvals.min()) < _RANK_TOL * top

    regularized = bool(deficient(eig_a) or deficient(eig_b))
    epsilon = 0.0
    if regularized:
        epsilon = 1e-6 * float(np.trace(cov_a) + np.trace(cov_b)) / (2.0 * a.dims)
        eye = np.eye(a.dims)
        cov_a = cov_a + epsilon * eye
        cov_b = cov_b + epsilon * eye

    root_a = sqrtm_psd(cov_a)
    inner = root_a @ cov_b @ root_a
    inner_eigs = np.linalg.eigvalsh((inner + inner.T) / 2.0)
    min_inner = float(inner_eigs.min())
    inner_eigs = np.clip(inner_eigs, 0.0, None)
    tr_sqrt = float(np.sqrt(inner_eigs).sum())

    delta = a.mean - b.mean
    value = float(delta @ delta + np.trace(cov_a) + np.trace(cov_b) - 2.0 * tr_sqrt)
    if not np.isfinite(value):
        raise NumericalError(
            "Fréchet distance is non-finite",
            diagnostics={
                "mean_term": float(delta @ delta),
                "trace_a": float(np.trace(cov_a)),
                "trace_b": float(np.trace(cov_b)),
                "trace_sqrt": tr_sqrt,
                "regularized": regularized,
            },
        )
    value = max(value, 0.0)
    if return_details:
        return value, FrechetDetails(
            regularized=regularized, epsilon=epsilon, min_eigenvalue=min_inner
        )
    return value
