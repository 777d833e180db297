import numpy as np
import pytest

from phenomap.tabular import Table


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def make_blobs(n_per_blob: int, centers, scale: float = 0.5, seed: int = 0):
    """Gaussian blobs around the given 2D-or-higher centers."""
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=np.float64)
    rows = []
    labels = []
    for label, center in enumerate(centers):
        rows.append(center + scale * rng.standard_normal((n_per_blob, len(center))))
        labels.append(np.full(n_per_blob, label))
    x = np.vstack(rows)
    y = np.concatenate(labels)
    perm = rng.permutation(len(x))
    return x[perm], y[perm]


def numeric_table(matrix: np.ndarray, prefix: str = "f") -> Table:
    """Wrap a float matrix as an all-numeric Table."""
    matrix = np.asarray(matrix, dtype=np.float64)
    names = [f"{prefix}{j}" for j in range(matrix.shape[1])]
    return Table(
        schema=tuple((name, "numeric") for name in names),
        columns={name: matrix[:, j].copy() for j, name in enumerate(names)},
        row_count=len(matrix),
    )


@pytest.fixture
def two_blobs():
    """Well-separated two-blob dataset in 5 dimensions."""
    centers = np.zeros((2, 5))
    centers[0, :] = 4.0
    centers[1, :] = -4.0
    return make_blobs(150, centers, scale=1.0, seed=7)
