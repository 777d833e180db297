"""Cross-fold stability sweep over embedding and clustering
hyperparameters.

For each leave-one-fold-out training set, a preprocessor and one reducer
per parameter combination are fitted once and shared across cluster
counts; each (reducer params, n) configuration is scored by the mean
pairwise adjusted Rand index of the five fold-models' predictions on the
shared test set. A configuration is valid when the fold-models actually
use close to n clusters (mean non-null count >= n - 0.5), and the
selected configuration maximizes mean pairwise ARI among valid ones.

Tasks are independent across (fold, reducer params) and carry their own
derived seeds, so results are identical at any thread count; threading
only changes wall time.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import NumericalError, ParameterError, ParseError, PhenomapError
from .gmm import MixtureModel, Partition, fit_gmm, predict
from .pca import PcaModel, fit_pca, transform_pca
from .preprocess import Preprocessor, apply_preprocessor, fit_preprocessor
from .seeds import derive_seed
from .stability import ari, mean_pairwise_ari
from .tabular import SplitPlan, Table
from .umap_embed import UmapModel, UmapParams, fit_umap, transform

log = logging.getLogger(__name__)

REPORT_VERSION = "phenomap-sweep-report v1"
REDUCERS = ("umap", "pca")


@dataclass(frozen=True)
class SweepGrid:
    """The hyperparameter grid; defaults follow the study design."""

    reducer: str = "umap"
    n_neighbors: tuple[int, ...] = (2, 15, 150)
    min_dist: tuple[float, ...] = (0.0, 0.1, 0.25)
    n_clusters: tuple[int, ...] = tuple(range(2, 21))
    epochs: int | None = None
    negative_sample_rate: int = 5
    learning_rate: float = 1.0
    parallel_sgd: bool = False

    def __post_init__(self):
        if self.reducer not in REDUCERS:
            raise ParameterError(f"reducer must be one of {REDUCERS}, "
                                 f"got {self.reducer!r}")
        if not self.n_clusters:
            raise ParameterError("n_clusters grid is empty")
        for n in self.n_clusters:
            if not 2 <= n <= 20:
                raise ParameterError(f"cluster count {n} outside [2, 20]")
        if self.reducer == "umap" and (not self.n_neighbors or not self.min_dist):
            raise ParameterError("umap grid needs n_neighbors and min_dist values")

    def reducer_params(self) -> tuple[tuple, ...]:
        if self.reducer == "pca":
            return ((None, None),)
        return tuple((nn, md) for nn in self.n_neighbors for md in self.min_dist)


@dataclass(frozen=True, order=True)
class SweepConfig:
    """One grid point; comparable for deterministic ordering."""

    reducer: str
    n_neighbors: int  # 0 for pca
    min_dist: float  # 0.0 for pca
    n_clusters: int
    seed: int


@dataclass(frozen=True)
class ConfigResult:
    config: SweepConfig
    mean_pairwise_ari: float | None
    mean_n_nonnull: float | None
    valid: bool
    failed: bool = False
    failure: str | None = None
    ground_truth_ari: float | None = None


@dataclass(frozen=True)
class _FittedReducer:
    fold: int
    training_rows: np.ndarray
    preprocessor: Preprocessor
    reducer: str
    umap: UmapModel | None
    pca: PcaModel | None
    training_embedding: np.ndarray
    test_embedding: np.ndarray


@dataclass(frozen=True)
class FoldModel:
    """Reducer + mixture trained on one leave-one-fold-out training set."""

    fold: int
    training_rows: np.ndarray
    preprocessor: Preprocessor
    reducer: str
    umap: UmapModel | None
    pca: PcaModel | None
    mixture: MixtureModel
    training_embedding: np.ndarray
    test_embedding: np.ndarray
    test_partition: Partition

    def embed(self, matrix: np.ndarray) -> np.ndarray:
        if self.reducer == "umap":
            return transform(self.umap, matrix)
        return transform_pca(self.pca, matrix)


@dataclass(frozen=True)
class SweepReport:
    seed: int
    grid: SweepGrid
    results: tuple[ConfigResult, ...]
    selected: SweepConfig | None
    test_rows: np.ndarray
    # Per config: the five fold-models' test labelings.
    partitions: Mapping[SweepConfig, tuple[Partition, ...]]


@dataclass(frozen=True)
class SweepResult:
    report: SweepReport
    # Fold-models for the selected config; None when nothing was stable.
    fold_models: tuple[FoldModel, ...] | None
    primary_fold: int | None


def _umap_params(grid: SweepGrid, seed: int, fold: int,
                 nn: int, md: float) -> UmapParams:
    return UmapParams(
        n_neighbors=nn,
        min_dist=md,
        epochs=grid.epochs,
        negative_sample_rate=grid.negative_sample_rate,
        initial_learning_rate=grid.learning_rate,
        seed=derive_seed(seed, "umap", fold, nn, repr(float(md))),
        parallel=grid.parallel_sgd,
    )


def _fit_fold(
    table: Table,
    split: SplitPlan,
    grid: SweepGrid,
    seed: int,
    fold: int,
    params: tuple,
) -> _FittedReducer:
    """Fit preprocessor + reducer for one (fold, reducer-params) task.

    Mixtures vary with n and are fitted by the caller; the heavy members
    here are dropped once partitions are extracted.
    """
    nn, md = params
    train_idx = split.training_indices_excluding(fold)
    pre = fit_preprocessor(table, train_idx)
    x_train = apply_preprocessor(pre, table, train_idx)
    x_test = apply_preprocessor(pre, table, split.test_indices)

    if grid.reducer == "umap":
        model = fit_umap(x_train, _umap_params(grid, seed, fold, nn, md))
        train_coords = model.embedding
        test_coords = transform(model, x_test)
        umap_model, pca_model = model, None
    else:
        model = fit_pca(x_train)
        train_coords = transform_pca(model, x_train)
        test_coords = transform_pca(model, x_test)
        umap_model, pca_model = None, model

    return _FittedReducer(
        fold=fold,
        training_rows=train_idx,
        preprocessor=pre,
        reducer=grid.reducer,
        umap=umap_model,
        pca=pca_model,
        training_embedding=train_coords,
        test_embedding=test_coords,
    )


def _gmm_seed(seed: int, fold: int, params: tuple, n: int) -> int:
    nn, md = params
    return derive_seed(seed, "gmm", fold, nn, repr(None if md is None else float(md)), n)


def _evaluate_task(table, split, grid, seed, fold, params):
    """All per-n test partitions for one (fold, reducer-params) task."""
    try:
        fitted = _fit_fold(table, split, grid, seed, fold, params)
        labelings = {}
        for n in grid.n_clusters:
            mixture = fit_gmm(fitted.training_embedding, n,
                              _gmm_seed(seed, fold, params, n))
            labelings[n] = predict(mixture, fitted.test_embedding)
        return labelings, None
    except (PhenomapError, np.linalg.LinAlgError) as exc:
        log.warning("fold %d %s failed: %s", fold, params, exc)
        return None, f"fold {fold}: {type(exc).__name__}: {exc}"


def run_sweep(
    table: Table,
    split: SplitPlan,
    grid: SweepGrid,
    seed: int,
    threads: int = 1,
    ground_truth: np.ndarray | None = None,
) -> SweepResult:
    """Evaluate the full grid and rebuild the winning fold-models.

    ``ground_truth`` (per table row) adds a ground-truth ARI column to
    the report, used on synthetic benchmarks.
    """
    if threads < 1:
        raise ParameterError("threads must be >= 1")
    if ground_truth is not None and len(ground_truth) != table.row_count:
        raise ParameterError("ground truth labels do not cover the table")

    test_idx = split.test_indices
    truth_test = None if ground_truth is None else np.asarray(ground_truth)[test_idx]
    param_sets = grid.reducer_params()
    tasks = [(fold, params) for params in param_sets
             for fold in range(split.fold_count)]

    if threads == 1:
        evaluations = {
            key: _evaluate_task(table, split, grid, seed, *key) for key in tasks
        }
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {
                key: pool.submit(_evaluate_task, table, split, grid, seed, *key)
                for key in tasks
            }
            evaluations = {key: future.result() for key, future in futures.items()}

    results = []
    partitions: dict[SweepConfig, tuple[Partition, ...]] = {}
    for params in param_sets:
        nn, md = params
        fold_evals = [evaluations[(fold, params)] for fold in range(split.fold_count)]
        errors = [err for _, err in fold_evals if err is not None]
        for n in grid.n_clusters:
            config = SweepConfig(
                reducer=grid.reducer,
                n_neighbors=0 if nn is None else nn,
                min_dist=0.0 if md is None else md,
                n_clusters=n,
                seed=seed,
            )
            if errors:
                results.append(ConfigResult(
                    config=config, mean_pairwise_ari=None, mean_n_nonnull=None,
                    valid=False, failed=True, failure="; ".join(errors),
                ))
                continue
            parts = tuple(labelings[n] for labelings, _ in fold_evals)
            partitions[config] = parts
            mean_ari = mean_pairwise_ari([p.labels for p in parts])
            mean_nonnull = float(np.mean([p.n_nonnull for p in parts]))
            truth_ari = None
            if truth_test is not None:
                truth_ari = float(np.mean([ari(p.labels, truth_test)
                                           for p in parts]))
            results.append(ConfigResult(
                config=config,
                mean_pairwise_ari=mean_ari,
                mean_n_nonnull=mean_nonnull,
                valid=bool(mean_nonnull >= n - 0.5),
                ground_truth_ari=truth_ari,
            ))

    selected = _select(results)
    report = SweepReport(
        seed=seed,
        grid=grid,
        results=tuple(results),
        selected=selected,
        test_rows=test_idx,
        partitions=partitions,
    )
    if selected is None:
        log.warning("no configuration passed the stability rule; "
                    "no fold-models retained")
        return SweepResult(report=report, fold_models=None, primary_fold=None)

    fold_models = _build_fold_models(table, split, grid, seed, selected,
                                     report, threads)
    primary = _primary_fold(report.partitions[selected])
    return SweepResult(report=report, fold_models=fold_models,
                       primary_fold=primary)


def _build_fold_models(table, split, grid, seed, selected, report,
                       threads) -> tuple[FoldModel, ...]:
    """Refit the five fold-models of the selected config.

    Every fit is deterministic under its derived seed, so this
    reproduces the evaluation pass exactly; the partition equality check
    guards that assumption.
    """
    params = (None, None) if grid.reducer == "pca" else (
        selected.n_neighbors, selected.min_dist)

    def build(fold: int) -> FoldModel:
        fitted = _fit_fold(table, split, grid, seed, fold, params)
        mixture = fit_gmm(fitted.training_embedding, selected.n_clusters,
                          _gmm_seed(seed, fold, params, selected.n_clusters))
        part = predict(mixture, fitted.test_embedding)
        expected = report.partitions[selected][fold]
        if not np.array_equal(part.labels, expected.labels):
            raise NumericalError(
                f"fold {fold} rebuild diverged from the evaluation pass; "
                f"determinism is broken"
            )
        return FoldModel(
            fold=fitted.fold,
            training_rows=fitted.training_rows,
            preprocessor=fitted.preprocessor,
            reducer=fitted.reducer,
            umap=fitted.umap,
            pca=fitted.pca,
            mixture=mixture,
            training_embedding=fitted.training_embedding,
            test_embedding=fitted.test_embedding,
            test_partition=part,
        )

    if threads == 1:
        return tuple(build(fold) for fold in range(split.fold_count))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(build, fold) for fold in range(split.fold_count)]
        return tuple(future.result() for future in futures)


def _primary_fold(parts: Sequence[Partition]) -> int:
    """The fold-model most in agreement with its peers on the test set."""
    scores = [
        sum(ari(parts[f].labels, parts[g].labels)
            for g in range(len(parts)) if g != f)
        for f in range(len(parts))
    ]
    return int(np.argmax(scores))


def _select(results: Sequence[ConfigResult]) -> SweepConfig | None:
    candidates = [r for r in results if r.valid and not r.failed]
    if not candidates:
        return None
    best = min(candidates, key=lambda r: (
        -r.mean_pairwise_ari,
        r.config.n_clusters,
        r.config.n_neighbors,
        r.config.min_dist,
    ))
    return best.config


def select(report: SweepReport) -> SweepConfig | None:
    """The valid ARI-maximal config; ties prefer smaller n, fewer
    neighbors, smaller min_dist. None means no stable clustering."""
    if not report.results:
        raise ParameterError("empty sweep report")
    return _select(report.results)


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


_COLUMNS = ("reducer", "n_neighbors", "min_dist", "n_clusters",
            "mean_pairwise_ari", "mean_n_nonnull", "valid", "selected",
            "failed", "ground_truth_ari", "failure")


def write_report(report: SweepReport, path: str | Path) -> None:
    """Line-oriented report file; identical runs produce identical bytes."""
    lines = [f"# {REPORT_VERSION}",
             f"# seed={report.seed}",
             f"# reducer={report.grid.reducer}",
             f"# selected={'none' if report.selected is None else _config_key(report.selected)}",
             "\t".join(_COLUMNS)]
    for r in report.results:
        is_selected = report.selected is not None and r.config == report.selected
        lines.append("\t".join((
            r.config.reducer,
            str(r.config.n_neighbors),
            repr(float(r.config.min_dist)),
            str(r.config.n_clusters),
            _fmt(r.mean_pairwise_ari),
            _fmt(r.mean_n_nonnull),
            _fmt(r.valid),
            _fmt(is_selected),
            _fmt(r.failed),
            _fmt(r.ground_truth_ari),
            r.failure.replace("\t", " ").replace("\n", " ") if r.failure else "-",
        )))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _config_key(config: SweepConfig) -> str:
    return (f"{config.reducer},{config.n_neighbors},"
            f"{float(config.min_dist)!r},{config.n_clusters}")


def read_report(path: str | Path) -> tuple[int, tuple[ConfigResult, ...]]:
    """Parse a report file back into (seed, results); summaries only."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or text[0] != f"# {REPORT_VERSION}":
        raise ParseError(f"{path}: not a {REPORT_VERSION} file")
    seed = None
    selected_key = None
    rows = []
    for line in text[1:]:
        if line.startswith("# seed="):
            seed = int(line.split("=", 1)[1])
        elif line.startswith("# selected="):
            selected_key = line.split("=", 1)[1]
        elif line.startswith("#") or line == "\t".join(_COLUMNS) or not line:
            continue
        else:
            rows.append(line.split("\t"))
    if seed is None:
        raise ParseError(f"{path}: missing seed header")
    results = []
    for row in rows:
        if len(row) != len(_COLUMNS):
            raise ParseError(f"{path}: malformed report row: {row!r}")
        config = SweepConfig(
            reducer=row[0],
            n_neighbors=int(row[1]),
            min_dist=float(row[2]),
            n_clusters=int(row[3]),
            seed=seed,
        )
        results.append(ConfigResult(
            config=config,
            mean_pairwise_ari=None if row[4] == "-" else float(row[4]),
            mean_n_nonnull=None if row[5] == "-" else float(row[5]),
            valid=row[6] == "1",
            failed=row[8] == "1",
            ground_truth_ari=None if row[9] == "-" else float(row[9]),
            failure=None if row[10] == "-" else row[10],
        ))
    del selected_key
    return seed, tuple(results)
