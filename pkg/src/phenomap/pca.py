"""2D principal-component baseline embedding.

Axes are the top-2 right singular directions of the centered training
matrix: covariance eigendecomposition for narrow matrices, Lanczos SVD
beyond 2,000 columns. Sign convention: the largest-magnitude component
of each axis is positive, so repeated fits produce the same plot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

_COVARIANCE_MAX_COLS = 2000


@dataclass(frozen=True)
class PcaModel:
    means: np.ndarray  # (d,) training column means
    axes: np.ndarray  # (d, 2) orthonormal, variance-descending
    explained_variance: np.ndarray  # (2,) sample variances along axes

    @property
    def input_dim(self) -> int:
        return len(self.means)


def _fix_signs(axes: np.ndarray) -> np.ndarray:
    axes = axes.copy()
    for j in range(axes.shape[1]):
        lead = np.argmax(np.abs(axes[:, j]))
        if axes[lead, j] < 0:
            axes[:, j] = -axes[:, j]
    return axes


def fit_pca(matrix: np.ndarray) -> PcaModel:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ParameterError("expected a 2D matrix")
    n, d = matrix.shape
    if n < 3:
        raise ParameterError(f"need at least 3 rows to fit, got {n}")
    if d < 2:
        raise ParameterError(f"need at least 2 columns for a 2D projection, got {d}")

    means = matrix.mean(axis=0)
    centered = matrix - means
    if not centered.any():
        raise ParameterError("matrix has zero variance; axes are undefined")

    if d <= _COVARIANCE_MAX_COLS:
        cov = (centered.T @ centered) / (n - 1)
        eigvals, eigvecs = np.linalg.eigh(cov)
        axes = eigvecs[:, [-1, -2]]
        variances = np.maximum(eigvals[[-1, -2]], 0.0)
    else:
        from scipy.sparse.linalg import svds

        v0 = np.full(min(n, d), 1.0 / np.sqrt(min(n, d)))
        u, s, vt = svds(centered, k=2, v0=v0)
        order = np.argsort(s)[::-1]
        axes = vt[order].T
        variances = s[order] ** 2 / (n - 1)

    return PcaModel(
        means=means,
        axes=_fix_signs(axes),
        explained_variance=variances,
    )


def transform_pca(model: PcaModel, matrix: np.ndarray) -> np.ndarray:
    """Affine projection (rows - training means) @ axes."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != model.input_dim:
        raise ParameterError(
            f"expected shape (*, {model.input_dim}), got {matrix.shape}"
        )
    return (matrix - model.means) @ model.axes
