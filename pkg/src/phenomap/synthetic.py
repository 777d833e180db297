"""Synthetic classification benchmark with planted cluster structure.

Class centroids sit on distinct random vertices of the hypercube
{-s, +s}^informative. Each sample is its class centroid plus
standard-normal noise pushed through a random full-rank linear map of
the informative subspace, drawn independently per class. The maps
correlate and inflate the noise well past the centroid scale, so no
single linear 2D view separates the classes; what distinguishes them
locally is each class's own noise orientation. Redundant features are
random linear combinations of the informative ones, leftover features
are pure noise, and the feature order is shuffled so informativeness
is not positional.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .tabular import Table


@dataclass(frozen=True)
class SyntheticSpec:
    sample_count: int
    feature_count: int
    informative_count: int
    class_count: int
    class_separation: float  # hypercube half-side length
    redundant_count: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.sample_count < 1 or self.feature_count < 1:
            raise ParameterError("sample_count and feature_count must be positive")
        if not 1 <= self.informative_count <= self.feature_count:
            raise ParameterError(
                f"informative_count {self.informative_count} must be in "
                f"[1, feature_count={self.feature_count}]"
            )
        if self.informative_count + self.redundant_count > self.feature_count:
            raise ParameterError(
                f"informative ({self.informative_count}) + redundant "
                f"({self.redundant_count}) features exceed feature_count "
                f"({self.feature_count})"
            )
        if self.class_count < 1:
            raise ParameterError("class_count must be positive")
        if (self.informative_count < 63
                and self.class_count > 2 ** self.informative_count):
            raise ParameterError(
                f"{self.class_count} classes cannot occupy distinct vertices of "
                f"a {self.informative_count}-dimensional hypercube "
                f"(only {2 ** self.informative_count} vertices)"
            )


def _distinct_vertices(rng: np.random.Generator, class_count: int,
                       dim: int) -> np.ndarray:
    """class_count distinct sign vectors in {-1, +1}^dim."""
    if dim < 20:
        codes = rng.choice(2 ** dim, size=class_count, replace=False)
        bits = (codes[:, None] >> np.arange(dim)[None, :]) & 1
        return bits.astype(np.float64) * 2.0 - 1.0
    # Vertex space is astronomically larger than class_count here, so
    # rejection sampling terminates almost immediately.
    seen: set[bytes] = set()
    rows = []
    while len(rows) < class_count:
        v = rng.integers(0, 2, size=dim).astype(np.float64) * 2.0 - 1.0
        key = v.tobytes()
        if key not in seen:
            seen.add(key)
            rows.append(v)
    return np.asarray(rows)


def _full_rank_map(rng: np.random.Generator, dim: int) -> np.ndarray:
    for _ in range(32):
        a = rng.uniform(-1.0, 1.0, size=(dim, dim))
        if np.linalg.matrix_rank(a) == dim:
            return a
    raise ParameterError(f"could not draw a full-rank {dim}x{dim} map")


def generate_synthetic(spec: SyntheticSpec) -> tuple[Table, np.ndarray]:
    """Deterministic benchmark table plus its ground-truth labels.

    Per-class sample counts differ by at most one; rows and feature
    columns are both shuffled under the spec seed.
    """
    rng = np.random.default_rng(spec.seed)
    n, m = spec.sample_count, spec.informative_count
    k = spec.class_count

    centroids = _distinct_vertices(rng, k, m) * spec.class_separation
    base = n // k
    counts = np.full(k, base, dtype=np.intp)
    counts[: n - base * k] += 1
    labels = np.repeat(np.arange(k), counts)

    # Each class gets its own noise map, applied to the noise alone, so
    # class_separation keeps its meaning as the hypercube half-side.
    informative = rng.standard_normal((n, m))
    stop = 0
    for c in range(k):
        start, stop = stop, stop + counts[c]
        informative[start:stop] = informative[start:stop] @ _full_rank_map(rng, m)
    informative += centroids[labels]

    blocks = [informative]
    if spec.redundant_count:
        mix = rng.uniform(-1.0, 1.0, size=(m, spec.redundant_count))
        blocks.append(informative @ mix)
    leftover = spec.feature_count - m - spec.redundant_count
    if leftover:
        blocks.append(rng.standard_normal((n, leftover)))
    features = np.hstack(blocks)

    col_order = rng.permutation(spec.feature_count)
    features = features[:, col_order]
    row_order = rng.permutation(n)
    features = features[row_order]
    labels = labels[row_order]

    width = len(str(spec.feature_count - 1))
    names = tuple(f"f{j:0{width}d}" for j in range(spec.feature_count))
    table = Table(
        schema=tuple((name, "numeric") for name in names),
        columns={name: np.ascontiguousarray(features[:, j])
                 for j, name in enumerate(names)},
        row_count=n,
    )
    return table, labels
