"""2D UMAP embedding: fuzzy neighborhood graph, negative-sampling SGD
layout, and a parametric transform for unseen points.

The graph stage calibrates a per-point offset rho (distance to the
nearest neighbor) and bandwidth sigma (solving the smooth-kNN equation),
turns the k-NN graph into directed memberships, and symmetrizes with the
probabilistic t-conorm. The layout stage runs edge-sampled attractive
and negative-sampled repulsive updates from a spectral initialization.
Transforms freeze the training atlas: new points are placed at the
membership-weighted average of their neighbors' coordinates and refined
alone, so a point's result is independent of the batch it arrives in.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _sgd
from .errors import NumericalError, ParameterError
from .neighbors import NeighborGraph, knn, knn_query
from .seeds import content_seed, derive_seed, taus_state

log = logging.getLogger(__name__)

OUTPUT_DIM = 2
_GAMMA = 1.0  # repulsion strength
_SIGMA_TOL = 1e-5
_SIGMA_LO_SCALE = 1e-3
_SIGMA_HI_SCALE = 1e3
_INIT_MAX_COORD = 10.0
_INIT_NOISE = 1e-4


@dataclass(frozen=True)
class UmapParams:
    n_neighbors: int = 15
    min_dist: float = 0.1
    epochs: int | None = None  # None: 500 below 10k rows, else 200
    negative_sample_rate: int = 5
    initial_learning_rate: float = 1.0
    seed: int = 0
    parallel: bool = False  # racy multi-threaded SGD, non-deterministic

    def __post_init__(self):
        if self.n_neighbors < 2:
            raise ParameterError(f"n_neighbors {self.n_neighbors} must be >= 2")
        if self.min_dist < 0:
            raise ParameterError(f"min_dist {self.min_dist} must be >= 0")
        if self.epochs is not None and self.epochs < 1:
            raise ParameterError(f"epochs {self.epochs} must be >= 1")
        if self.negative_sample_rate < 1:
            raise ParameterError("negative_sample_rate must be >= 1")


@dataclass(frozen=True)
class FuzzyGraph:
    """Symmetric membership-weighted neighborhood graph."""

    matrix: sp.csr_matrix  # weights in (0, 1], w_ij = w_ji
    rho: np.ndarray  # (n,) distance to nearest neighbor
    sigma: np.ndarray  # (n,) calibrated bandwidth


@dataclass(frozen=True)
class UmapModel:
    params: UmapParams
    a: float
    b: float
    embedding: np.ndarray  # (n, 2) fitted training coordinates
    training: np.ndarray  # (n, d) training matrix, kept for transform
    epochs_used: int
    graph: FuzzyGraph | None = None  # fit byproduct; transform does not need it


def resolve_epochs(params: UmapParams, row_count: int) -> int:
    if params.epochs is not None:
        return params.epochs
    return 500 if row_count < 10_000 else 200


def _smooth_knn_matrix(distances: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (rho, sigma) calibration over rows of ascending distances."""
    n, k = distances.shape
    target = np.log2(k)

    positive = distances > 0.0
    has_positive = positive.any(axis=1)
    first_positive = np.argmax(positive, axis=1)
    rho = np.where(has_positive,
                   distances[np.arange(n), first_positive], 0.0)

    adjusted = np.maximum(distances - rho[:, None], 0.0)
    mean_d = distances.mean(axis=1)

    def residual(sigma: np.ndarray) -> np.ndarray:
        return np.exp(-adjusted / sigma[:, None]).sum(axis=1) - target

    lo = np.full(n, 1e-12)
    hi = np.maximum(_SIGMA_HI_SCALE * mean_d, 1.0)
    # The membership sum is increasing in sigma, so bisect.
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        high = residual(mid) > 0.0
        hi = np.where(high, mid, hi)
        lo = np.where(high, lo, mid)
    sigma = 0.5 * (lo + hi)

    floor = _SIGMA_LO_SCALE * mean_d
    ceil = _SIGMA_HI_SCALE * mean_d
    sigma = np.clip(sigma, floor, np.maximum(ceil, 1e-8))
    degenerate = mean_d <= 0.0
    if degenerate.any():
        log.warning("%d rows have all-zero neighbor distances; bandwidth "
                    "set to the clamp floor", int(degenerate.sum()))
        sigma = np.where(degenerate, 1e-8, sigma)

    unsolved = np.abs(residual(sigma)) > _SIGMA_TOL
    unsolved &= ~degenerate
    if unsolved.any():
        log.warning("smooth-kNN equation infeasible for %d rows; bandwidth "
                    "clamped", int(unsolved.sum()))
    return rho, sigma


def smooth_knn(distances_row: np.ndarray, k: int) -> tuple[float, float]:
    """Calibrate (rho, sigma) for one row of ascending neighbor distances."""
    d = np.asarray(distances_row, dtype=np.float64).ravel()
    if k < 2:
        raise ParameterError(f"k {k} must be >= 2")
    if len(d) != k:
        raise ParameterError(f"expected {k} distances, got {len(d)}")
    if (np.diff(d) < 0).any():
        raise ParameterError("distances must be ascending")
    rho, sigma = _smooth_knn_matrix(d[None, :])
    return float(rho[0]), float(sigma[0])


def _membership_weights(distances: np.ndarray, rho: np.ndarray,
                        sigma: np.ndarray) -> np.ndarray:
    return np.exp(-np.maximum(distances - rho[:, None], 0.0) / sigma[:, None])


def fuzzy_graph(neighbor_graph: NeighborGraph) -> FuzzyGraph:
    """Directed memberships from (rho, sigma), symmetrized by w1 + w2 - w1*w2."""
    n, k = neighbor_graph.indices.shape
    rho, sigma = _smooth_knn_matrix(neighbor_graph.distances)
    weights = _membership_weights(neighbor_graph.distances, rho, sigma)

    rows = np.repeat(np.arange(n), k)
    directed = sp.coo_matrix(
        (weights.ravel(), (rows, neighbor_graph.indices.ravel())), shape=(n, n)
    ).tocsr()
    transposed = directed.T.tocsr()
    symmetric = directed + transposed - directed.multiply(transposed)
    symmetric = sp.csr_matrix(symmetric)
    symmetric.eliminate_zeros()
    return FuzzyGraph(matrix=symmetric, rho=rho, sigma=sigma)


def fit_curve(min_dist: float) -> tuple[float, float]:
    """Least-squares (a, b) so 1/(1 + a d^(2b)) tracks the min_dist target."""
    if min_dist < 0:
        raise ParameterError(f"min_dist {min_dist} must be >= 0")
    from scipy.optimize import curve_fit

    xv = np.linspace(0.0, 3.0, 300)
    yv = np.where(xv < min_dist, 1.0, np.exp(-(xv - min_dist)))

    def curve(x, a, b):
        with np.errstate(divide="ignore", over="ignore"):
            return 1.0 / (1.0 + a * x ** (2.0 * b))

    try:
        (a, b), _ = curve_fit(curve, xv, yv, p0=(1.0, 1.0), maxfev=10_000)
    except RuntimeError as exc:
        raise NumericalError(f"membership curve fit failed: {exc}") from exc
    rms = float(np.sqrt(np.mean((curve(xv, a, b) - yv) ** 2)))
    log.debug("curve fit min_dist=%g: a=%.6f b=%.6f rms=%.3e", min_dist, a, b, rms)
    return float(a), float(b)


def _spectral_layout(graph: sp.csr_matrix) -> np.ndarray:
    """Top non-trivial eigenvectors of the normalized adjacency."""
    from scipy.sparse.linalg import eigsh

    n = graph.shape[0]
    degree = np.asarray(graph.sum(axis=1)).ravel()
    if (degree <= 0).any():
        raise NumericalError("graph has isolated vertices")
    inv_sqrt = sp.diags(1.0 / np.sqrt(degree))
    normalized = inv_sqrt @ graph @ inv_sqrt
    v0 = np.full(n, 1.0 / np.sqrt(n))
    eigenvalues, eigenvectors = eigsh(normalized, k=3, which="LA", v0=v0,
                                      tol=1e-4, maxiter=50 * n)
    order = np.argsort(eigenvalues)[::-1]
    return eigenvectors[:, order[1:3]]


def _initial_embedding(fuzzy: FuzzyGraph, seed: int) -> np.ndarray:
    n = fuzzy.matrix.shape[0]
    try:
        base = _spectral_layout(fuzzy.matrix)
        spread = np.abs(base).max()
        if not spread > 0:
            raise NumericalError("degenerate spectral coordinates")
        base = base * (_INIT_MAX_COORD / spread)
    except Exception as exc:  # Arpack failures come in several flavors
        log.warning("spectral initialization failed (%s); using random layout",
                    exc)
        rng = np.random.default_rng(derive_seed(seed, "random-init"))
        base = rng.uniform(-_INIT_MAX_COORD, _INIT_MAX_COORD, size=(n, 2))
    noise_rng = np.random.default_rng(derive_seed(seed, "init-noise"))
    return np.ascontiguousarray(
        base + noise_rng.normal(scale=_INIT_NOISE, size=(n, 2))
    )


def _edge_schedule(weights: np.ndarray, n_epochs: int,
                   negative_sample_rate: int
                   ) -> tuple[np.ndarray, np.ndarray]:
    epochs_per_sample = weights.max() / weights
    epochs_per_negative = epochs_per_sample / negative_sample_rate
    return epochs_per_sample, epochs_per_negative


def fit_umap(matrix: np.ndarray, params: UmapParams) -> UmapModel:
    """Fit the 2D layout; deterministic under (seed, parallel=False)."""
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ParameterError("expected a 2D matrix")
    n = len(matrix)
    if n <= params.n_neighbors:
        raise ParameterError(
            f"need more than n_neighbors={params.n_neighbors} rows, got {n}"
        )

    n_epochs = resolve_epochs(params, n)
    fuzzy = fuzzy_graph(knn(matrix, params.n_neighbors))
    a, b = fit_curve(params.min_dist)
    embedding = _initial_embedding(fuzzy, params.seed)

    pruned = fuzzy.matrix.copy()
    pruned.data[pruned.data < pruned.data.max() / n_epochs] = 0.0
    pruned.eliminate_zeros()
    edges = pruned.tocoo()
    heads = edges.row.astype(np.int64)
    tails = edges.col.astype(np.int64)
    eps_sample, eps_negative = _edge_schedule(
        edges.data, n_epochs, params.negative_sample_rate
    )

    next_sample = eps_sample.copy()
    next_negative = eps_negative.copy()
    state = taus_state(derive_seed(params.seed, "sgd"))
    kernel = (_sgd.layout_epoch_parallel if params.parallel
              else _sgd.layout_epoch_serial)

    alpha = params.initial_learning_rate
    for epoch in range(n_epochs):
        kernel(embedding, embedding, heads, tails, n, eps_sample,
               eps_negative, next_sample, next_negative, a, b, _GAMMA,
               alpha, True, epoch, state)
        if not np.isfinite(embedding).all():
            raise NumericalError(
                f"non-finite embedding coordinate at epoch {epoch}"
            )
        alpha = params.initial_learning_rate * (1.0 - epoch / n_epochs)

    return UmapModel(
        params=params,
        a=a,
        b=b,
        embedding=embedding,
        training=matrix,
        epochs_used=n_epochs,
        graph=fuzzy,
    )


def transform(
    model: UmapModel,
    new_matrix: np.ndarray,
    refinement_epochs: int | None = None,
) -> np.ndarray:
    """Embed unseen rows against the frozen training atlas.

    Each row is initialized at the membership-weighted average of its
    nearest training embeddings (snapping onto an exact training match)
    and refined independently with a content-derived rng, so transforming
    a batch equals transforming each row alone.
    """
    new_matrix = np.ascontiguousarray(new_matrix, dtype=np.float64)
    if new_matrix.ndim != 2 or new_matrix.shape[1] != model.training.shape[1]:
        raise ParameterError(
            f"expected shape (*, {model.training.shape[1]}), "
            f"got {new_matrix.shape}"
        )
    if refinement_epochs is None:
        refinement_epochs = model.epochs_used // 3
    if refinement_epochs < 0:
        raise ParameterError("refinement_epochs must be >= 0")

    k = model.params.n_neighbors
    query = knn_query(new_matrix, model.training, k)
    rho, sigma = _smooth_knn_matrix(query.distances)
    weights = _membership_weights(query.distances, rho, sigma)

    neighbor_coords = model.embedding[query.indices]  # (q, k, 2)
    coords = (weights[:, :, None] * neighbor_coords).sum(axis=1)
    coords /= weights.sum(axis=1)[:, None]
    exact = query.distances[:, 0] == 0.0
    coords[exact] = model.embedding[query.indices[exact, 0]]
    coords = np.ascontiguousarray(coords)

    if refinement_epochs == 0 or len(coords) == 0:
        return coords

    # Per-row edge schedule with per-row pruning; rows never interact.
    keep = weights >= (weights.max(axis=1, keepdims=True) / refinement_epochs)
    counts = keep.sum(axis=1)
    indptr = np.zeros(len(coords) + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    flat_keep = keep.ravel()
    indices = query.indices.ravel()[flat_keep].astype(np.int64)
    kept_weights = weights.ravel()[flat_keep]
    row_max = np.repeat(weights.max(axis=1), counts)
    eps_sample = row_max / kept_weights
    eps_negative = eps_sample / model.params.negative_sample_rate

    states = np.empty((len(coords), 3), dtype=np.int64)
    for i in range(len(coords)):
        states[i] = taus_state(content_seed(model.params.seed, new_matrix[i]))

    _sgd.refine_queries(
        coords, model.embedding, indptr, indices, eps_sample, eps_negative,
        states, refinement_epochs, model.a, model.b, _GAMMA,
        model.params.initial_learning_rate / 4.0,
    )
    if not np.isfinite(coords).all():
        raise NumericalError("non-finite coordinate during transform refinement")
    return coords
