"""Cluster profiles and cross-fold matched summaries."""

import numpy as np
import pytest

from phenomap.errors import ParameterError
from phenomap.gmm import Partition
from phenomap.phenotype import (
    ClusterProfile,
    characterize,
    summarize_across_folds,
)


def part(labels, n_declared=None):
    labels = np.asarray(labels, dtype=np.intp)
    n = int(labels.max()) + 1 if n_declared is None else n_declared
    return Partition(labels=labels, n_declared=n,
                     n_nonnull=len(np.unique(labels)))


class TestCharacterize:
    def test_two_cluster_hand_values(self):
        # column means: cluster 0 -> 1.0, cluster 1 -> 3.0, overall 2.0
        matrix = np.array([[1.0], [1.0], [3.0], [3.0]])
        profiles = characterize(matrix, part([0, 0, 1, 1]), ["v"])
        assert [p.cluster_id for p in profiles] == [0, 1]
        assert profiles[0].differences == (("v", -1.0),)
        assert profiles[1].differences == (("v", 1.0),)
        assert profiles[0].share == 0.5
        assert profiles[0].member_count == 2

    def test_single_cluster_differences_vanish(self):
        rng = np.random.default_rng(0)
        matrix = rng.normal(size=(20, 4))
        profiles = characterize(matrix, part([0] * 20), list("abcd"))
        assert len(profiles) == 1
        assert all(d == 0.0 for _, d in profiles[0].differences)

    def test_constant_feature_has_zero_difference(self):
        matrix = np.column_stack([np.ones(6), np.arange(6.0)])
        profiles = characterize(matrix, part([0, 0, 0, 1, 1, 1]), ["c", "v"])
        for p in profiles:
            assert dict(p.differences)["c"] == 0.0

    def test_share_weighted_differences_sum_to_zero(self):
        rng = np.random.default_rng(3)
        matrix = rng.normal(size=(50, 6))
        labels = rng.integers(0, 3, size=50)
        profiles = characterize(matrix, part(labels, 3), [f"f{i}" for i in range(6)])
        for name in (f"f{i}" for i in range(6)):
            total = sum(p.share * dict(p.differences)[name] for p in profiles)
            assert abs(total) < 1e-12

    def test_ranked_by_magnitude_then_name(self):
        matrix = np.array([
            [0.0, 2.0, -2.0],
            [0.0, 0.0, 0.0],
        ])
        profiles = characterize(matrix, part([0, 1]), ["a", "b", "c"])
        names = [name for name, _ in profiles[0].differences]
        assert names == ["b", "c", "a"]  # |1|, |1| tie -> alphabetical, then 0

    def test_empty_declared_cluster_omitted(self):
        matrix = np.zeros((4, 1))
        profiles = characterize(matrix, part([0, 0, 2, 2], n_declared=3), ["v"])
        assert [p.cluster_id for p in profiles] == [0, 2]

    def test_top_features_truncates(self):
        matrix = np.diag([4.0, 3.0, 2.0, 1.0])
        profiles = characterize(matrix, part([0, 0, 1, 1]), list("abcd"))
        assert len(profiles[0].top_features(2)) == 2

    def test_shape_validation(self):
        with pytest.raises(ParameterError, match="2D"):
            characterize(np.zeros(4), part([0, 0, 1, 1]), ["v"])
        with pytest.raises(ParameterError, match="rows"):
            characterize(np.zeros((3, 1)), part([0, 0, 1, 1]), ["v"])
        with pytest.raises(ParameterError, match="feature names"):
            characterize(np.zeros((4, 2)), part([0, 0, 1, 1]), ["v"])


def profile(cid, share, diffs, count=10):
    ranked = tuple(sorted(diffs.items(), key=lambda kv: (-abs(kv[1]), kv[0])))
    return ClusterProfile(cluster_id=cid, member_count=count, share=share,
                          differences=ranked)


class TestSummarize:
    def test_identity_folds_match_one_to_one(self):
        labels = [0, 0, 1, 1, 2, 2]
        parts = [part(labels), part(labels)]
        profs = [
            [profile(c, 1 / 3, {"v": float(c)}, count=2) for c in range(3)]
            for _ in range(2)
        ]
        summary = summarize_across_folds(profs, parts)
        assert summary.unmatched == ()
        assert [m.fold_cluster_ids for m in summary.clusters] == [
            (0, 0), (1, 1), (2, 2)]
        m0 = summary.clusters[0]
        assert m0.share_mean == pytest.approx(1 / 3)
        assert m0.share_ci == pytest.approx((1 / 3, 1 / 3))
        assert m0.member_count_mean == 2.0

    def test_relabeled_folds_still_match(self):
        ref = [0, 0, 0, 1, 1, 1]
        flip = [1, 1, 1, 0, 0, 0]
        parts = [part(ref), part(flip)]
        profs = [
            [profile(0, 0.5, {"v": -1.0}, 3), profile(1, 0.5, {"v": 1.0}, 3)],
            [profile(0, 0.5, {"v": 1.0}, 3), profile(1, 0.5, {"v": -1.0}, 3)],
        ]
        summary = summarize_across_folds(profs, parts)
        assert summary.clusters[0].fold_cluster_ids == (0, 1)
        assert summary.clusters[1].fold_cluster_ids == (1, 0)
        # the matched profiles agree, so the averaged difference is intact
        assert dict(summary.clusters[0].differences)["v"] == -1.0

    def test_confidence_interval_hand_value(self):
        # shares 0.70 and 0.74: mean 0.72, sd(ddof=1) = 0.02828...
        parts = [part([0, 0, 1, 1]), part([0, 0, 1, 1])]
        profs = [
            [profile(0, 0.70, {"v": 0.0}), profile(1, 0.30, {"v": 0.0})],
            [profile(0, 0.74, {"v": 0.0}), profile(1, 0.26, {"v": 0.0})],
        ]
        summary = summarize_across_folds(profs, parts)
        m = summary.clusters[0]
        sd = np.std([0.70, 0.74], ddof=1)
        assert m.share_mean == pytest.approx(0.72)
        assert m.share_ci[0] == pytest.approx(0.72 - 1.96 * sd)
        assert m.share_ci[1] == pytest.approx(0.72 + 1.96 * sd)

    def test_admit_rates_from_outcome_column(self):
        labels = [0, 0, 1, 1]
        parts = [part(labels), part(labels)]
        profs = [
            [profile(0, 0.5, {"v": 0.0}, 2), profile(1, 0.5, {"v": 0.0}, 2)]
            for _ in range(2)
        ]
        outcome = np.array([1.0, 1.0, 0.0, 1.0])
        summary = summarize_across_folds(profs, parts, outcome_values=outcome)
        assert summary.clusters[0].admit_rate_mean == pytest.approx(1.0)
        assert summary.clusters[1].admit_rate_mean == pytest.approx(0.5)

    def test_no_outcome_means_no_rates(self):
        parts = [part([0, 0, 1, 1])] * 2
        profs = [[profile(0, 0.5, {"v": 0.0}), profile(1, 0.5, {"v": 0.0})]] * 2
        summary = summarize_across_folds(profs, parts)
        assert summary.clusters[0].admit_rate_mean is None
        assert summary.clusters[0].admit_rate_ci is None

    def test_extra_cluster_reported_unmatched(self):
        ref = [0, 0, 0, 0, 1, 1]
        other = [0, 0, 2, 2, 1, 1]  # cluster 2 splits off from reference 0
        parts = [part(ref), part(other)]
        profs = [
            [profile(0, 4 / 6, {"v": 0.0}, 4), profile(1, 2 / 6, {"v": 0.0}, 2)],
            [profile(c, 2 / 6, {"v": 0.0}, 2) for c in range(3)],
        ]
        summary = summarize_across_folds(profs, parts)
        assert summary.unmatched == ((1, 2, 2 / 6),)

    def test_unmatched_reference_cluster_keeps_none_slot(self):
        ref = [0, 0, 1, 1, 2, 2]
        other = [0, 0, 1, 1, 1, 1]  # only two clusters in the other fold
        parts = [part(ref), part(other)]
        profs = [
            [profile(c, 1 / 3, {"v": 0.0}, 2) for c in range(3)],
            [profile(0, 1 / 3, {"v": 0.0}, 2), profile(1, 2 / 3, {"v": 0.0}, 4)],
        ]
        summary = summarize_across_folds(profs, parts)
        slot = [m for m in summary.clusters if None in m.fold_cluster_ids]
        assert len(slot) == 1
        assert slot[0].fold_cluster_ids[0] in (1, 2)

    def test_differences_averaged_across_matched_folds(self):
        parts = [part([0, 0, 1, 1])] * 3
        profs = [
            [profile(0, 0.5, {"a": d, "b": 0.1}), profile(1, 0.5, {"a": -d, "b": -0.1})]
            for d in (0.2, 0.4, 0.6)
        ]
        summary = summarize_across_folds(profs, parts)
        diffs = dict(summary.clusters[0].differences)
        assert diffs["a"] == pytest.approx(0.4)
        assert diffs["b"] == pytest.approx(0.1)
        # 0.4 outranks 0.1 after averaging
        assert summary.clusters[0].differences[0][0] == "a"

    def test_reference_fold_parameter(self):
        parts = [part([0, 0, 1, 1]), part([1, 1, 0, 0])]
        profs = [
            [profile(0, 0.5, {"v": -1.0}), profile(1, 0.5, {"v": 1.0})],
            [profile(0, 0.5, {"v": 1.0}), profile(1, 0.5, {"v": -1.0})],
        ]
        summary = summarize_across_folds(profs, parts, reference_fold=1)
        assert summary.reference_fold == 1
        assert summary.clusters[0].fold_cluster_ids == (1, 0)

    def test_validation(self):
        parts = [part([0, 0, 1, 1])]
        profs = [[profile(0, 0.5, {"v": 0.0}), profile(1, 0.5, {"v": 0.0})]]
        with pytest.raises(ParameterError, match="at least 2"):
            summarize_across_folds(profs, parts)
        with pytest.raises(ParameterError, match="out of range"):
            summarize_across_folds(profs * 2, parts * 2, reference_fold=2)
        with pytest.raises(ParameterError, match="outcome values"):
            summarize_across_folds(profs * 2, parts * 2,
                                   outcome_values=np.zeros(3))
