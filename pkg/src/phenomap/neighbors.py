"""Exact k-nearest-neighbor search under the Euclidean metric.

Candidate neighbors are found per block with the BLAS expansion
|q - f|^2 = |q|^2 + |f|^2 - 2 q.f, then re-scored with the direct
difference formula. The candidate cutoff keeps every point whose
expansion-form distance is within a slack of the (k + pad)-th smallest,
and the slack dominates the expansion's rounding error, so the final
(distance, index) ordering is identical to an exhaustive scan, ties
included.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

# Extra candidates collected beyond k before exact re-scoring.
_PAD = 16
# Relative slack on squared distances; far above float64 rounding error
# for any feature count this package meets, far below real gaps.
_REL_SLACK = 1e-9


@dataclass(frozen=True)
class NeighborGraph:
    """Per-row k nearest neighbors with ascending distances."""

    k: int
    indices: np.ndarray  # (rows, k) intp
    distances: np.ndarray  # (rows, k) float64, sorted ascending per row

    @property
    def row_count(self) -> int:
        return len(self.indices)


def _block_rows(n_fitted: int) -> int:
    return max(1, int(4_000_000 // max(1, n_fitted)))


def _exact_topk(
    query: np.ndarray,
    fitted: np.ndarray,
    k: int,
    exclude_diagonal: bool,
) -> tuple[np.ndarray, np.ndarray]:
    n_q, n_f = len(query), len(fitted)
    fitted_sq = np.einsum("ij,ij->i", fitted, fitted)
    out_idx = np.empty((n_q, k), dtype=np.intp)
    out_sq = np.empty((n_q, k), dtype=np.float64)

    kth = min(k + _PAD, n_f) - 1
    slack_scale = _REL_SLACK * (float(fitted_sq.max(initial=0.0)) + 1.0)

    step = _block_rows(n_f)
    for start in range(0, n_q, step):
        stop = min(start + step, n_q)
        q = query[start:stop]
        approx = -2.0 * (q @ fitted.T)
        approx += fitted_sq[None, :]
        approx += np.einsum("ij,ij->i", q, q)[:, None]
        np.maximum(approx, 0.0, out=approx)
        if exclude_diagonal:
            rows = np.arange(start, stop)
            approx[rows - start, rows] = np.inf

        cutoff = np.partition(approx, kth, axis=1)[:, kth]
        slack = _REL_SLACK * np.einsum("ij,ij->i", q, q) + slack_scale
        mask = approx <= (cutoff + slack)[:, None]

        for i in range(stop - start):
            cand = np.flatnonzero(mask[i])
            if exclude_diagonal:
                cand = cand[cand != start + i]
            # Direct-difference distances; matches the brute-force form.
            exact = np.sum((fitted[cand] - q[i]) ** 2, axis=1)
            order = np.lexsort((cand, exact))[:k]
            out_idx[start + i] = cand[order]
            out_sq[start + i] = exact[order]

    return out_idx, np.sqrt(out_sq)


def knn(matrix: np.ndarray, k: int) -> NeighborGraph:
    """Exact k nearest neighbors of every row among the other rows.

    Ties at equal distance are broken by lower index; self-pairs are
    excluded even at distance zero.
    """
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    n = len(matrix)
    if not 1 <= k < n:
        raise ParameterError(f"k={k} out of range [1, {n - 1}] for {n} rows")
    idx, dist = _exact_topk(matrix, matrix, k, exclude_diagonal=True)
    return NeighborGraph(k=k, indices=idx, distances=dist)


def knn_query(matrix: np.ndarray, fitted_points: np.ndarray, k: int) -> NeighborGraph:
    """For each query row, its k nearest fitted rows (self-match allowed)."""
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    fitted_points = np.ascontiguousarray(fitted_points, dtype=np.float64)
    if matrix.ndim != 2 or fitted_points.ndim != 2:
        raise ParameterError("expected 2D query and fitted matrices")
    if matrix.shape[1] != fitted_points.shape[1]:
        raise ParameterError(
            f"query dimension {matrix.shape[1]} does not match fitted "
            f"dimension {fitted_points.shape[1]}"
        )
    n_f = len(fitted_points)
    if not 1 <= k <= n_f:
        raise ParameterError(f"k={k} out of range [1, {n_f}] for {n_f} fitted rows")
    idx, dist = _exact_topk(matrix, fitted_points, k, exclude_diagonal=False)
    return NeighborGraph(k=k, indices=idx, distances=dist)
