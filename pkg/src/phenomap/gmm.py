"""Full-covariance Gaussian mixtures over 2D embeddings, fitted by EM.

Means are seeded k-means++ style, covariances start at the data
covariance, and every M-step adds a small ridge to the covariance
diagonals so components stay positive-definite even when nearly empty.
Log-densities go through an explicit 2x2 Cholesky factorization; the
E-step normalizes in log space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import NumericalError, ParameterError
from .seeds import derive_seed

_LOG_2PI = float(np.log(2.0 * np.pi))

REG_FLOOR = 1e-6
REL_TOL = 1e-4
MAX_ITER = 200
RESTARTS = 3


@dataclass(frozen=True)
class MixtureModel:
    n: int
    weights: np.ndarray  # (n,) simplex
    means: np.ndarray  # (n, 2)
    covariances: np.ndarray  # (n, 2, 2) symmetric positive-definite
    converged: bool
    log_likelihood: float
    seed: int
    ll_trace: tuple[float, ...] = ()


@dataclass(frozen=True)
class Partition:
    """Hard labels plus how many declared components are actually used."""

    labels: np.ndarray  # (rows,) intp in [0, n_declared)
    n_declared: int
    n_nonnull: int


def _cholesky_2x2(cov: np.ndarray) -> tuple[float, float, float] | None:
    a, b, c = cov[0, 0], cov[0, 1], cov[1, 1]
    if not a > 0.0:
        return None
    l00 = np.sqrt(a)
    l10 = b / l00
    rem = c - l10 * l10
    if not rem > 0.0:
        return None
    return float(l00), float(l10), float(np.sqrt(rem))


def _component_log_density(points: np.ndarray, mean: np.ndarray,
                           chol: tuple[float, float, float]) -> np.ndarray:
    l00, l10, l11 = chol
    dx0 = points[:, 0] - mean[0]
    dx1 = points[:, 1] - mean[1]
    z0 = dx0 / l00
    z1 = (dx1 - l10 * z0) / l11
    return -0.5 * (z0 * z0 + z1 * z1) - _LOG_2PI - (np.log(l00) + np.log(l11))


def _weighted_log_prob(points: np.ndarray, weights: np.ndarray,
                       means: np.ndarray, covariances: np.ndarray) -> np.ndarray:
    n = len(weights)
    out = np.empty((len(points), n), dtype=np.float64)
    with np.errstate(divide="ignore"):  # empty components carry weight 0
        log_w = np.log(weights)
    for k in range(n):
        chol = _cholesky_2x2(covariances[k])
        if chol is None:
            raise NumericalError(
                f"component {k} covariance is singular despite regularization"
            )
        out[:, k] = log_w[k] + _component_log_density(points, means[k], chol)
    return out


def _kmeanspp_means(points: np.ndarray, n: int,
                    rng: np.random.Generator) -> np.ndarray:
    means = np.empty((n, 2), dtype=np.float64)
    means[0] = points[rng.integers(len(points))]
    closest_sq = np.sum((points - means[0]) ** 2, axis=1)
    for k in range(1, n):
        total = closest_sq.sum()
        if total > 0.0:
            probs = closest_sq / total
            means[k] = points[rng.choice(len(points), p=probs)]
        else:  # all points coincide with chosen means
            means[k] = points[rng.integers(len(points))]
        closest_sq = np.minimum(closest_sq, np.sum((points - means[k]) ** 2, axis=1))
    return means


def _m_step(points: np.ndarray, resp: np.ndarray
            ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n_pts = len(points)
    nk = resp.sum(axis=0) + 10.0 * np.finfo(np.float64).tiny
    weights = nk / n_pts
    means = (resp.T @ points) / nk[:, None]
    covariances = np.empty((resp.shape[1], 2, 2), dtype=np.float64)
    for k in range(resp.shape[1]):
        dx0 = points[:, 0] - means[k, 0]
        dx1 = points[:, 1] - means[k, 1]
        w = resp[:, k]
        c00 = (w * dx0 * dx0).sum() / nk[k] + REG_FLOOR
        c01 = (w * dx0 * dx1).sum() / nk[k]
        c11 = (w * dx1 * dx1).sum() / nk[k] + REG_FLOOR
        covariances[k] = ((c00, c01), (c01, c11))
    return weights, means, covariances


def _run_em(points: np.ndarray, n: int, rng: np.random.Generator
            ) -> tuple[np.ndarray, np.ndarray, np.ndarray, bool, list[float]]:
    n_pts = len(points)
    means = _kmeanspp_means(points, n, rng)
    dx = points - points.mean(axis=0)
    data_cov = (dx.T @ dx) / n_pts + REG_FLOOR * np.eye(2)
    covariances = np.repeat(data_cov[None, :, :], n, axis=0)
    weights = np.full(n, 1.0 / n)

    trace: list[float] = []
    converged = False
    previous = -np.inf
    for _ in range(MAX_ITER):
        wlp = _weighted_log_prob(points, weights, means, covariances)
        log_norm = logsumexp(wlp, axis=1)
        ll = float(log_norm.sum())
        if not np.isfinite(ll):
            raise NumericalError("non-finite log-likelihood during EM")
        trace.append(ll)
        if ll - previous < REL_TOL * abs(ll):
            converged = True
            break
        previous = ll
        resp = np.exp(wlp - log_norm[:, None])
        weights, means, covariances = _m_step(points, resp)
    return weights, means, covariances, converged, trace


def fit_gmm(points_2d: np.ndarray, n: int, seed: int) -> MixtureModel:
    """Best-of-3-restarts EM fit of an n-component full-covariance mixture."""
    points = np.asarray(points_2d, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ParameterError(f"expected (rows, 2) points, got {points.shape}")
    if not np.isfinite(points).all():
        raise ParameterError("points contain non-finite values")
    if n < 1:
        raise ParameterError(f"component count {n} must be at least 1")
    if n > len(points):
        raise ParameterError(
            f"cannot fit {n} components to {len(points)} points"
        )

    best = None
    for restart in range(RESTARTS):
        rng = np.random.default_rng(derive_seed(seed, "gmm-restart", restart))
        fitted = _run_em(points, n, rng)
        if best is None or fitted[4][-1] > best[4][-1]:
            best = fitted
    weights, means, covariances, converged, trace = best
    return MixtureModel(
        n=n,
        weights=weights,
        means=means,
        covariances=covariances,
        converged=converged,
        log_likelihood=trace[-1],
        seed=seed,
        ll_trace=tuple(trace),
    )


def predict(model: MixtureModel, points_2d: np.ndarray) -> Partition:
    """Hard component labels; ties go to the lower component index."""
    points = np.asarray(points_2d, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ParameterError(f"expected (rows, 2) points, got {points.shape}")
    if not np.isfinite(points).all():
        raise ParameterError("points contain non-finite values")
    wlp = _weighted_log_prob(points, model.weights, model.means,
                             model.covariances)
    labels = np.argmax(wlp, axis=1).astype(np.intp)
    return Partition(
        labels=labels,
        n_declared=model.n,
        n_nonnull=int(len(np.unique(labels))),
    )


def responsibilities(model: MixtureModel, points_2d: np.ndarray) -> np.ndarray:
    """Row-stochastic posterior probabilities over components."""
    points = np.asarray(points_2d, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ParameterError(f"expected (rows, 2) points, got {points.shape}")
    if not np.isfinite(points).all():
        raise ParameterError("points contain non-finite values")
    wlp = _weighted_log_prob(points, model.weights, model.means,
                             model.covariances)
    return np.exp(wlp - logsumexp(wlp, axis=1)[:, None])
