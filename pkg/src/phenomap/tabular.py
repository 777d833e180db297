"""Tabular data model: schema-declared tables, CSV ingestion, complaint
filtering, and train/test/fold splitting.

A :class:`Table` stores columns as numpy arrays: numeric and binary-flag
columns as float64 (``nan`` marks missing), categorical columns as object
arrays (``None`` marks missing). Tables are immutable after construction
and safe to share across threads.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, ParameterError, ParseError, SchemaError

log = logging.getLogger(__name__)

COLUMN_KINDS = ("numeric", "categorical", "binary-flag")
DEFAULT_MISSING_TOKENS = ("", "NA", "NaN")


@dataclass(frozen=True)
class SchemaConfig:
    """Declarative column schema for CSV ingestion.

    ``kinds`` maps column names to one of ``numeric``, ``categorical``,
    ``binary-flag``. Columns absent from ``kinds`` are inferred as numeric
    when every non-missing cell parses as a finite float, else categorical.
    ``excluded`` columns (visit outcome, triage score) are carried in the
    table but never emitted into feature matrices; ``complaint_flags``
    name the binary columns usable with :func:`filter_by_complaint`.
    """

    kinds: Mapping[str, str] = field(default_factory=dict)
    excluded: tuple[str, ...] = ()
    complaint_flags: tuple[str, ...] = ()
    missing_tokens: tuple[str, ...] = DEFAULT_MISSING_TOKENS

    def __post_init__(self):
        for col, kind in self.kinds.items():
            if kind not in COLUMN_KINDS:
                raise ConfigError(
                    f"unknown column kind {kind!r} for column {col!r}; "
                    f"expected one of {COLUMN_KINDS}"
                )

    @classmethod
    def from_dict(cls, raw: Mapping) -> "SchemaConfig":
        known = {"columns", "excluded", "complaint_flags", "missing_tokens"}
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"unknown schema config keys: {sorted(extra)}")
        return cls(
            kinds=dict(raw.get("columns", {})),
            excluded=tuple(raw.get("excluded", ())),
            complaint_flags=tuple(raw.get("complaint_flags", ())),
            missing_tokens=tuple(raw.get("missing_tokens", DEFAULT_MISSING_TOKENS)),
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "SchemaConfig":
        import json

        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"schema config {path}: invalid JSON ({exc})") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"schema config {path}: expected a JSON object")
        return cls.from_dict(raw)


@dataclass(frozen=True)
class Table:
    """An immutable column-oriented table with a declared schema.

    ``schema`` lists every column (name, kind) in order, including the
    excluded-outcome columns; ``feature_schema`` omits those.
    """

    schema: tuple[tuple[str, str], ...]
    columns: Mapping[str, np.ndarray]
    row_count: int
    complaint_flags: tuple[str, ...] = ()
    excluded: tuple[str, ...] = ()

    def __post_init__(self):
        for name, kind in self.schema:
            col = self.columns[name]
            if len(col) != self.row_count:
                raise SchemaError(f"column {name!r} has {len(col)} cells, "
                                  f"expected {self.row_count}")
            if kind in ("numeric", "binary-flag"):
                vals = np.asarray(col, dtype=np.float64)
                if np.isinf(vals).any():
                    raise SchemaError(f"column {name!r} contains non-finite values")

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.schema)

    @property
    def feature_schema(self) -> tuple[tuple[str, str], ...]:
        """Schema restricted to columns allowed in feature matrices."""
        return tuple((n, k) for n, k in self.schema if n not in self.excluded)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise SchemaError(f"no column named {name!r}") from None

    def kind_of(self, name: str) -> str:
        for n, k in self.schema:
            if n == name:
                return k
        raise SchemaError(f"no column named {name!r}")

    def subset(self, row_indices: Sequence[int] | np.ndarray) -> "Table":
        idx = np.asarray(row_indices, dtype=np.intp)
        cols = {name: col[idx] for name, col in self.columns.items()}
        return Table(
            schema=self.schema,
            columns=cols,
            row_count=len(idx),
            complaint_flags=self.complaint_flags,
            excluded=self.excluded,
        )


def _parse_numeric(token: str, missing: frozenset, col: str, row_idx: int) -> float:
    if token in missing:
        return math.nan
    try:
        value = float(token)
    except ValueError:
        raise ParseError(
            f"row {row_idx}: cell {token!r} in numeric column {col!r} "
            f"is not a number"
        ) from None
    if not math.isfinite(value):
        raise ParseError(
            f"row {row_idx}: non-finite value {token!r} in numeric column {col!r}"
        )
    return value


def _parse_flag(token: str, missing: frozenset, col: str, row_idx: int) -> float:
    # A missing complaint/indicator flag means "not flagged".
    if token in missing:
        return 0.0
    if token in ("0", "1"):
        return float(token)
    raise ParseError(
        f"row {row_idx}: cell {token!r} in binary-flag column {col!r} "
        f"is not 0 or 1"
    )


def load_csv(path: str | Path, schema_config: SchemaConfig) -> Table:
    """Load an RFC-4180 CSV with a header row into a :class:`Table`.

    Column kinds come from ``schema_config``; undeclared columns are
    inferred numeric-vs-categorical. Raises :class:`ParseError` naming the
    1-based data row index for malformed rows, :class:`ConfigError` when
    the config references columns absent from the header.
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, expected a header row") from None
        raw_rows = list(reader)

    names = [h.strip() for h in header]
    if len(set(names)) != len(names):
        raise ParseError(f"{path}: duplicate column names in header")

    for declared in schema_config.kinds:
        if declared not in names:
            raise ConfigError(f"schema declares column {declared!r} "
                              f"not present in header")
    for col in schema_config.excluded + schema_config.complaint_flags:
        if col not in names:
            raise ConfigError(f"schema references column {col!r} "
                              f"not present in header")

    missing = frozenset(schema_config.missing_tokens)
    n_cols = len(names)
    for i, row in enumerate(raw_rows, start=1):
        if len(row) != n_cols:
            raise ParseError(
                f"{path}: row {i} has {len(row)} cells, expected {n_cols}"
            )

    cells = list(zip(*raw_rows)) if raw_rows else [() for _ in names]

    kinds: dict[str, str] = {}
    for j, name in enumerate(names):
        if name in schema_config.complaint_flags:
            declared = schema_config.kinds.get(name, "binary-flag")
            if declared != "binary-flag":
                raise ConfigError(
                    f"complaint flag column {name!r} must be binary-flag, "
                    f"declared {declared!r}"
                )
            kinds[name] = "binary-flag"
        elif name in schema_config.kinds:
            kinds[name] = schema_config.kinds[name]
        else:
            kinds[name] = _infer_kind(cells[j], missing)

    columns: dict[str, np.ndarray] = {}
    for j, name in enumerate(names):
        kind = kinds[name]
        toks = cells[j]
        if kind == "numeric":
            columns[name] = np.array(
                [_parse_numeric(t, missing, name, i) for i, t in enumerate(toks, 1)],
                dtype=np.float64,
            )
        elif kind == "binary-flag":
            columns[name] = np.array(
                [_parse_flag(t, missing, name, i) for i, t in enumerate(toks, 1)],
                dtype=np.float64,
            )
        else:
            columns[name] = np.array(
                [None if t in missing else t for t in toks], dtype=object
            )

    return Table(
        schema=tuple((name, kinds[name]) for name in names),
        columns=columns,
        row_count=len(raw_rows),
        complaint_flags=schema_config.complaint_flags,
        excluded=schema_config.excluded,
    )


def _infer_kind(tokens: Iterable[str], missing: frozenset) -> str:
    observed = [t for t in tokens if t not in missing]
    if not observed:
        return "numeric"
    for t in observed:
        try:
            v = float(t)
        except ValueError:
            return "categorical"
        if not math.isfinite(v):
            return "categorical"
    return "numeric"


def filter_by_complaint(table: Table, complaint_flag_column: str) -> Table:
    """Rows where the given complaint flag is set.

    Visits flagged for several complaints appear in each matching subset.
    An empty result is returned (with a warning) rather than raised.
    """
    if complaint_flag_column not in table.column_names:
        raise SchemaError(f"no column named {complaint_flag_column!r}")
    if table.kind_of(complaint_flag_column) != "binary-flag":
        raise SchemaError(
            f"column {complaint_flag_column!r} is "
            f"{table.kind_of(complaint_flag_column)!r}, not a binary flag"
        )
    mask = table.column(complaint_flag_column) == 1.0
    if not mask.any():
        log.warning("no rows flagged for complaint %r", complaint_flag_column)
    return table.subset(np.flatnonzero(mask))


@dataclass(frozen=True)
class SplitPlan:
    """Row assignment into one shared test set and k training folds.

    ``assignment[i]`` is -1 for test rows, else the fold index in
    ``[0, fold_count)``. Folds partition the training rows with sizes
    differing by at most one.
    """

    seed: int
    test_fraction: float
    fold_count: int
    assignment: np.ndarray

    @property
    def row_count(self) -> int:
        return len(self.assignment)

    @property
    def test_indices(self) -> np.ndarray:
        return np.flatnonzero(self.assignment == -1)

    @property
    def train_indices(self) -> np.ndarray:
        return np.flatnonzero(self.assignment >= 0)

    def fold_indices(self, fold: int) -> np.ndarray:
        if not 0 <= fold < self.fold_count:
            raise ParameterError(f"fold {fold} out of range 0..{self.fold_count - 1}")
        return np.flatnonzero(self.assignment == fold)

    def training_indices_excluding(self, fold: int) -> np.ndarray:
        """The leave-one-fold-out training set for one fold-model."""
        if not 0 <= fold < self.fold_count:
            raise ParameterError(f"fold {fold} out of range 0..{self.fold_count - 1}")
        return np.flatnonzero((self.assignment >= 0) & (self.assignment != fold))


def make_split(
    table: Table,
    seed: int,
    test_fraction: float = 0.2,
    fold_count: int = 5,
) -> SplitPlan:
    """Uniform random test/fold assignment, deterministic under ``seed``.

    Training indices are shuffled once and dealt round-robin into folds,
    which keeps fold sizes within one row of each other.
    """
    n = table.row_count
    if n < fold_count * 2:
        raise ParameterError(
            f"{n} rows is too few to split into {fold_count} folds "
            f"(need at least {fold_count * 2})"
        )
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_test = int(round(test_fraction * n))
    assignment = np.empty(n, dtype=np.int8)
    assignment[perm[:n_test]] = -1
    for pos, row in enumerate(perm[n_test:]):
        assignment[row] = pos % fold_count
    return SplitPlan(
        seed=seed,
        test_fraction=test_fraction,
        fold_count=fold_count,
        assignment=assignment,
    )
