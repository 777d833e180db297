"""Partition-agreement metrics: adjusted Rand index and its mean over
fold-model pairs.

The index is computed in exact integer arithmetic from the contingency
table and converted to float once at the end, so oracle comparisons are
limited only by that single rounding.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb
from typing import Sequence

import numpy as np

from .errors import ParameterError


def _canonical(labels: np.ndarray) -> np.ndarray:
    """Relabel by order of first occurrence, making set partitions comparable."""
    out = np.empty(len(labels), dtype=np.intp)
    seen: dict = {}
    for i, lab in enumerate(labels.tolist()):
        out[i] = seen.setdefault(lab, len(seen))
    return out


def ari(labels_a: Sequence | np.ndarray, labels_b: Sequence | np.ndarray) -> float:
    """Hubert-Arabie adjusted Rand index between two labelings.

    When the adjustment denominator vanishes (both labelings are
    all-singletons or single-cluster) the index is 1 for identical set
    partitions and 0 otherwise, matching the limit of the adjusted form.
    """
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if len(a) != len(b):
        raise ParameterError(f"label lengths differ: {len(a)} vs {len(b)}")
    if len(a) == 0:
        raise ParameterError("cannot compare empty labelings")

    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    n_a = int(ia.max()) + 1
    n_b = int(ib.max()) + 1
    contingency = np.zeros((n_a, n_b), dtype=np.int64)
    np.add.at(contingency, (ia, ib), 1)

    sum_cells = sum(comb(int(c), 2) for c in contingency.ravel())
    sum_rows = sum(comb(int(c), 2) for c in contingency.sum(axis=1))
    sum_cols = sum(comb(int(c), 2) for c in contingency.sum(axis=0))
    total_pairs = comb(len(a), 2)

    max_index = Fraction(sum_rows + sum_cols, 2)
    if total_pairs == 0:
        expected = Fraction(0)
    else:
        expected = Fraction(sum_rows * sum_cols, total_pairs)

    if max_index == expected:
        identical = np.array_equal(_canonical(a), _canonical(b))
        return 1.0 if identical else 0.0
    return float((Fraction(sum_cells) - expected) / (max_index - expected))


def mean_pairwise_ari(labelings: Sequence[np.ndarray]) -> float:
    """Mean ARI over all unordered pairs of labelings (self-pairs excluded)."""
    if len(labelings) < 2:
        raise ParameterError(
            f"need at least 2 labelings, got {len(labelings)}"
        )
    lengths = {len(np.asarray(lab).ravel()) for lab in labelings}
    if len(lengths) != 1:
        raise ParameterError("labelings cover differing row counts")
    values = [
        ari(labelings[i], labelings[j])
        for i in range(len(labelings))
        for j in range(i + 1, len(labelings))
    ]
    return float(np.mean(values))
