"""Fit-once preprocessing from a Table to a dense feature matrix.

Numeric and binary-flag columns are min-max scaled to unit range on the
training rows, then centered by the post-scaling training mean, so every
non-constant output column has range <= 1 and mean 0 on the training
matrix. Missing numerics are imputed with the training observed mean
before scaling. Categorical columns are one-hot encoded against the
training vocabulary (missing is its own token) and centered by the
training block mean without rescaling. Test rows reuse the training
factors unclamped.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import SchemaError
from .tabular import Table

log = logging.getLogger(__name__)

# Vocabulary token standing in for a missing categorical cell.
MISSING_TOKEN = "(missing)"


@dataclass(frozen=True)
class NumericStats:
    minimum: float
    maximum: float
    impute: float  # mean of observed raw training values
    center: float  # mean of the scaled, imputed training column
    constant: bool


@dataclass(frozen=True)
class CategoryStats:
    vocabulary: tuple[str, ...]
    centers: tuple[float, ...]  # training share of each category


@dataclass(frozen=True)
class Preprocessor:
    """Fitted encoder/scaler/imputer, reusable on unseen rows."""

    feature_schema: tuple[tuple[str, str], ...]
    numeric: Mapping[str, NumericStats]
    categorical: Mapping[str, CategoryStats]
    feature_names: tuple[str, ...]

    @property
    def output_dim(self) -> int:
        return len(self.feature_names)


def _fit_numeric(values: np.ndarray, name: str) -> NumericStats:
    observed = values[~np.isnan(values)]
    if observed.size == 0:
        log.warning("numeric column %r has no observed training values; "
                    "emitting a constant zero column", name)
        return NumericStats(0.0, 0.0, 0.0, 0.0, constant=True)
    minimum = float(observed.min())
    maximum = float(observed.max())
    impute = float(observed.mean())
    if maximum == minimum:
        return NumericStats(minimum, maximum, impute, 0.0, constant=True)
    filled = np.where(np.isnan(values), impute, values)
    scaled = (filled - minimum) / (maximum - minimum)
    return NumericStats(minimum, maximum, impute, float(scaled.mean()),
                        constant=False)


def _fit_categorical(tokens: Sequence) -> CategoryStats:
    toks = [MISSING_TOKEN if t is None else str(t) for t in tokens]
    vocabulary = tuple(sorted(set(toks)))
    n = len(toks)
    counts = {cat: 0 for cat in vocabulary}
    for t in toks:
        counts[t] += 1
    centers = tuple(counts[cat] / n for cat in vocabulary)
    return CategoryStats(vocabulary=vocabulary, centers=centers)


def fit_preprocessor(table: Table, training_rows: Sequence[int] | np.ndarray) -> Preprocessor:
    """Fit scaling, imputation, and one-hot vocabularies on training rows only."""
    idx = np.asarray(training_rows, dtype=np.intp)
    if idx.size == 0:
        raise SchemaError("cannot fit a preprocessor on zero training rows")

    numeric: dict[str, NumericStats] = {}
    categorical: dict[str, CategoryStats] = {}
    feature_names: list[str] = []
    for name, kind in table.feature_schema:
        col = table.column(name)[idx]
        if kind in ("numeric", "binary-flag"):
            numeric[name] = _fit_numeric(np.asarray(col, dtype=np.float64), name)
            feature_names.append(name)
        else:
            stats = _fit_categorical(col)
            categorical[name] = stats
            feature_names.extend(f"{name}={cat}" for cat in stats.vocabulary)

    return Preprocessor(
        feature_schema=table.feature_schema,
        numeric=numeric,
        categorical=categorical,
        feature_names=tuple(feature_names),
    )


def _check_schema(pre: Preprocessor, table: Table) -> None:
    fitted = dict(pre.feature_schema)
    incoming = dict(table.feature_schema)
    bad = sorted(
        set(fitted) ^ set(incoming)
        | {n for n in fitted if n in incoming and fitted[n] != incoming[n]}
    )
    if bad:
        raise SchemaError(f"table schema does not match fitted preprocessor; "
                          f"offending columns: {bad}")


def apply_preprocessor(
    pre: Preprocessor,
    table: Table,
    rows: Sequence[int] | np.ndarray | None = None,
) -> np.ndarray:
    """Encode rows into the fitted feature space.

    Pure given the fitted preprocessor: the same rows always produce the
    same float64 matrix. Unseen categories are logged once per column.
    """
    matrix, row_warnings = apply_preprocessor_with_warnings(pre, table, rows)
    unseen: set[tuple[str, str]] = set()
    for warnings in row_warnings:
        for kind, col, detail in warnings:
            if kind == "unseen-category":
                unseen.add((col, detail))
    for col, token in sorted(unseen):
        log.warning("category %r in column %r was not seen in training; "
                    "encoding as a zero block", token, col)
    return matrix


def apply_preprocessor_with_warnings(
    pre: Preprocessor,
    table: Table,
    rows: Sequence[int] | np.ndarray | None = None,
) -> tuple[np.ndarray, list[list[tuple[str, str, str]]]]:
    """Like :func:`apply_preprocessor`, also returning per-row warnings.

    Each warning is ``(kind, column, detail)`` with kind one of
    ``unseen-category`` or ``imputed``.
    """
    _check_schema(pre, table)
    if rows is None:
        idx = np.arange(table.row_count, dtype=np.intp)
    else:
        idx = np.asarray(rows, dtype=np.intp)
    n = len(idx)
    out = np.zeros((n, pre.output_dim), dtype=np.float64)
    row_warnings: list[list[tuple[str, str, str]]] = [[] for _ in range(n)]

    offset = 0
    for name, kind in pre.feature_schema:
        col = table.column(name)[idx]
        if kind in ("numeric", "binary-flag"):
            stats = pre.numeric[name]
            if not stats.constant:
                vals = np.asarray(col, dtype=np.float64)
                missing = np.isnan(vals)
                filled = np.where(missing, stats.impute, vals)
                span = stats.maximum - stats.minimum
                out[:, offset] = (filled - stats.minimum) / span - stats.center
                for i in np.flatnonzero(missing):
                    row_warnings[i].append(("imputed", name, f"{stats.impute!r}"))
            offset += 1
        else:
            stats = pre.categorical[name]
            width = len(stats.vocabulary)
            position = {cat: j for j, cat in enumerate(stats.vocabulary)}
            centers = np.asarray(stats.centers, dtype=np.float64)
            for i, raw in enumerate(col):
                token = MISSING_TOKEN if raw is None else str(raw)
                j = position.get(token)
                if j is None:
                    # Unseen category: leave the whole block at exact zero,
                    # the neutral "training average" encoding.
                    row_warnings[i].append(("unseen-category", name, token))
                    continue
                out[i, offset:offset + width] = -centers
                out[i, offset + j] += 1.0
            offset += width

    return out, row_warnings
