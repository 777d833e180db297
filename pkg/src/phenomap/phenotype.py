"""Cluster characterization over the normalized test matrix.

A cluster's profile is the difference between its members' mean and the
whole test set's mean, per normalized feature, ranked by magnitude.
Because features are centered and the weights are cluster shares, the
share-weighted differences sum to zero per feature, which makes the
profiles directly comparable across clusters.

Cross-fold summaries match clusters between fold-models by greedy
maximum overlap of their test labels and report mean +- 1.96 sd
confidence intervals across the fold values.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError
from .gmm import Partition

log = logging.getLogger(__name__)

_Z95 = 1.96


@dataclass(frozen=True)
class ClusterProfile:
    cluster_id: int
    member_count: int
    share: float
    # (feature name, cluster mean - overall mean), |difference| descending,
    # ties by feature name.
    differences: tuple[tuple[str, float], ...]

    def top_features(self, k: int) -> tuple[tuple[str, float], ...]:
        return self.differences[:k]


@dataclass(frozen=True)
class MatchedCluster:
    """One cluster tracked across fold-models."""

    summary_id: int
    fold_cluster_ids: tuple[int | None, ...]  # per fold; None when unmatched
    share_mean: float
    share_ci: tuple[float, float]
    admit_rate_mean: float | None
    admit_rate_ci: tuple[float, float] | None
    member_count_mean: float
    # Mean of matched fold profiles' differences, re-ranked.
    differences: tuple[tuple[str, float], ...]

    def top_features(self, k: int) -> tuple[tuple[str, float], ...]:
        return self.differences[:k]


@dataclass(frozen=True)
class FoldSummary:
    clusters: tuple[MatchedCluster, ...]
    # Clusters that never matched the reference fold: (fold, cluster id, share).
    unmatched: tuple[tuple[int, int, float], ...]
    reference_fold: int


def _rank(names: Sequence[str], diffs: np.ndarray) -> tuple[tuple[str, float], ...]:
    order = sorted(range(len(names)), key=lambda j: (-abs(diffs[j]), names[j]))
    return tuple((names[j], float(diffs[j])) for j in order)


def characterize(
    normalized_test_matrix: np.ndarray,
    partition: Partition,
    feature_names: Sequence[str],
) -> list[ClusterProfile]:
    """Profiles for every non-empty cluster of the test partition."""
    matrix = np.asarray(normalized_test_matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ParameterError("expected a 2D normalized matrix")
    if len(partition.labels) != len(matrix):
        raise ParameterError(
            f"partition covers {len(partition.labels)} rows, matrix has "
            f"{len(matrix)}"
        )
    if matrix.shape[1] != len(feature_names):
        raise ParameterError(
            f"{matrix.shape[1]} matrix columns vs {len(feature_names)} "
            f"feature names"
        )

    overall = matrix.mean(axis=0)
    total = len(matrix)
    profiles = []
    for cluster in range(partition.n_declared):
        members = partition.labels == cluster
        count = int(members.sum())
        if count == 0:
            log.info("cluster %d is empty on the test set; omitting", cluster)
            continue
        diffs = matrix[members].mean(axis=0) - overall
        profiles.append(ClusterProfile(
            cluster_id=cluster,
            member_count=count,
            share=count / total,
            differences=_rank(feature_names, diffs),
        ))
    return profiles


def _greedy_match(reference: np.ndarray, other: np.ndarray) -> dict[int, int]:
    """Greedy maximum-overlap pairing: reference cluster -> other cluster."""
    ref_ids = np.unique(reference)
    other_ids = np.unique(other)
    overlap = {
        (int(r), int(o)): int(np.sum((reference == r) & (other == o)))
        for r in ref_ids
        for o in other_ids
    }
    pairs = sorted(overlap.items(), key=lambda kv: (-kv[1], kv[0]))
    matched: dict[int, int] = {}
    used_other: set[int] = set()
    for (r, o), count in pairs:
        if count == 0 or r in matched or o in used_other:
            continue
        matched[r] = o
        used_other.add(o)
    return matched


def _mean_ci(values: Sequence[float]) -> tuple[float, tuple[float, float]]:
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return mean, (mean - _Z95 * sd, mean + _Z95 * sd)


def summarize_across_folds(
    per_fold_profiles: Sequence[Sequence[ClusterProfile]],
    per_fold_partitions: Sequence[Partition],
    outcome_values: np.ndarray | None = None,
    reference_fold: int = 0,
) -> FoldSummary:
    """Aggregate fold-model profiles into matched per-cluster summaries.

    ``outcome_values`` (0/1 per test row, reporting only) enables admit
    rates. Clusters of non-reference folds that never match a reference
    cluster are listed in ``unmatched``.
    """
    n_folds = len(per_fold_profiles)
    if n_folds < 2:
        raise ParameterError(f"need at least 2 fold-models, got {n_folds}")
    if len(per_fold_partitions) != n_folds:
        raise ParameterError("profiles and partitions disagree on fold count")
    if not 0 <= reference_fold < n_folds:
        raise ParameterError(f"reference fold {reference_fold} out of range")
    if outcome_values is not None:
        outcome_values = np.asarray(outcome_values, dtype=np.float64)
        if len(outcome_values) != len(per_fold_partitions[0].labels):
            raise ParameterError("outcome values do not cover the test rows")

    reference_labels = per_fold_partitions[reference_fold].labels
    matches = [
        _greedy_match(reference_labels, per_fold_partitions[f].labels)
        if f != reference_fold else None
        for f in range(n_folds)
    ]
    profile_index = [
        {p.cluster_id: p for p in fold_profiles}
        for fold_profiles in per_fold_profiles
    ]

    clusters = []
    matched_ids_per_fold: list[set[int]] = [set() for _ in range(n_folds)]
    for ref_profile in per_fold_profiles[reference_fold]:
        fold_ids: list[int | None] = []
        shares, counts, rates = [], [], []
        diff_stack = []
        for f in range(n_folds):
            if f == reference_fold:
                cid = ref_profile.cluster_id
            else:
                cid = matches[f].get(ref_profile.cluster_id)
                if cid is not None and cid not in profile_index[f]:
                    cid = None
            fold_ids.append(cid)
            if cid is None:
                continue
            matched_ids_per_fold[f].add(cid)
            profile = profile_index[f][cid]
            shares.append(profile.share)
            counts.append(profile.member_count)
            diff_stack.append(dict(profile.differences))
            if outcome_values is not None:
                members = per_fold_partitions[f].labels == cid
                rates.append(float(outcome_values[members].mean()))

        share_mean, share_ci = _mean_ci(shares)
        if rates:
            rate_mean, rate_ci = _mean_ci(rates)
        else:
            rate_mean, rate_ci = None, None
        # Fold vocabularies can differ (per-fold one-hot), so average each
        # feature over the folds that actually encode it.
        names = [name for name, _ in ref_profile.differences]
        mean_diffs = np.array([
            np.mean([d[name] for d in diff_stack if name in d])
            for name in names
        ])
        clusters.append(MatchedCluster(
            summary_id=ref_profile.cluster_id,
            fold_cluster_ids=tuple(fold_ids),
            share_mean=share_mean,
            share_ci=share_ci,
            admit_rate_mean=rate_mean,
            admit_rate_ci=rate_ci,
            member_count_mean=float(np.mean(counts)),
            differences=_rank(names, mean_diffs),
        ))

    unmatched = []
    for f in range(n_folds):
        if f == reference_fold:
            continue
        for profile in per_fold_profiles[f]:
            if profile.cluster_id not in matched_ids_per_fold[f]:
                unmatched.append((f, profile.cluster_id, profile.share))
    return FoldSummary(
        clusters=tuple(clusters),
        unmatched=tuple(unmatched),
        reference_fold=reference_fold,
    )
