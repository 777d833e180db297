"""Versioned persistence for a fitted pipeline.

An artifact is a single ``.npz`` (no pickling) holding the working
table, the split assignment, and per-fold embeddings, mixtures, and test
labels, plus a JSON metadata block. Preprocessors, training matrices,
profiles, and summaries are recomputed on load from the stored table:
those computations are pure, so a loaded artifact transforms stored test
rows to bit-identical coordinates.
"""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__ as _tool_version
from .errors import ParseError
from .gmm import MixtureModel, Partition
from .pca import PcaModel
from .phenotype import (ClusterProfile, FoldSummary, characterize,
                        summarize_across_folds)
from .preprocess import apply_preprocessor, fit_preprocessor
from .sweep import (ConfigResult, FoldModel, SweepConfig, SweepGrid,
                    SweepReport, SweepResult)
from .tabular import SchemaConfig, SplitPlan, Table
from .umap_embed import UmapModel, UmapParams

ARTIFACT_VERSION = 1


@dataclass(frozen=True)
class PipelineArtifact:
    version: int
    tool_version: str
    seed: int
    schema_config: SchemaConfig
    table: Table
    split: SplitPlan
    report: SweepReport
    fold_models: tuple[FoldModel, ...] | None  # None: no stable clustering
    primary_fold: int | None
    profiles: tuple[tuple[ClusterProfile, ...], ...] | None  # per fold
    summary: FoldSummary | None
    outcome_column: str | None
    complaint: str | None
    ground_truth: np.ndarray | None

    @property
    def stable(self) -> bool:
        return self.fold_models is not None


def _fold_profiles(
    table: Table,
    split: SplitPlan,
    fold_models: tuple[FoldModel, ...],
) -> tuple[tuple[ClusterProfile, ...], ...]:
    test_idx = split.test_indices
    per_fold = []
    for fm in fold_models:
        matrix = apply_preprocessor(fm.preprocessor, table, test_idx)
        per_fold.append(tuple(characterize(
            matrix, fm.test_partition, fm.preprocessor.feature_names)))
    return tuple(per_fold)


def build_artifact(
    schema_config: SchemaConfig,
    table: Table,
    split: SplitPlan,
    sweep_result: SweepResult,
    seed: int,
    outcome_column: str | None = None,
    complaint: str | None = None,
    ground_truth: np.ndarray | None = None,
) -> PipelineArtifact:
    """Assemble the artifact, characterizing clusters when models exist."""
    profiles = None
    summary = None
    if sweep_result.fold_models is not None:
        profiles = _fold_profiles(table, split, sweep_result.fold_models)
        outcome_values = None
        if outcome_column is not None:
            outcome_values = np.asarray(
                table.column(outcome_column)[split.test_indices],
                dtype=np.float64,
            )
        summary = summarize_across_folds(
            profiles,
            [fm.test_partition for fm in sweep_result.fold_models],
            outcome_values=outcome_values,
            reference_fold=sweep_result.primary_fold,
        )
    return PipelineArtifact(
        version=ARTIFACT_VERSION,
        tool_version=_tool_version,
        seed=seed,
        schema_config=schema_config,
        table=table,
        split=split,
        report=sweep_result.report,
        fold_models=sweep_result.fold_models,
        primary_fold=sweep_result.primary_fold,
        profiles=profiles,
        summary=summary,
        outcome_column=outcome_column,
        complaint=complaint,
        ground_truth=ground_truth,
    )


def _config_to_json(config: SweepConfig | None):
    return None if config is None else asdict(config)


def _config_from_json(raw) -> SweepConfig | None:
    return None if raw is None else SweepConfig(**raw)


def _result_to_json(r: ConfigResult):
    d = asdict(r)
    d["config"] = asdict(r.config)
    return d


def _result_from_json(raw) -> ConfigResult:
    raw = dict(raw)
    raw["config"] = SweepConfig(**raw["config"])
    return ConfigResult(**raw)


def save_artifact(artifact: PipelineArtifact, path: str | Path) -> None:
    arrays: dict[str, np.ndarray] = {}
    meta = {
        "version": artifact.version,
        "tool_version": artifact.tool_version,
        "seed": artifact.seed,
        "schema_config": {
            "columns": dict(artifact.schema_config.kinds),
            "excluded": list(artifact.schema_config.excluded),
            "complaint_flags": list(artifact.schema_config.complaint_flags),
            "missing_tokens": list(artifact.schema_config.missing_tokens),
        },
        "table_schema": [list(pair) for pair in artifact.table.schema],
        "split": {
            "seed": artifact.split.seed,
            "test_fraction": artifact.split.test_fraction,
            "fold_count": artifact.split.fold_count,
        },
        "grid": asdict(artifact.report.grid),
        "results": [_result_to_json(r) for r in artifact.report.results],
        "selected": _config_to_json(artifact.report.selected),
        "primary_fold": artifact.primary_fold,
        "outcome_column": artifact.outcome_column,
        "complaint": artifact.complaint,
        "has_ground_truth": artifact.ground_truth is not None,
        "folds": [],
    }

    for i, (name, kind) in enumerate(artifact.table.schema):
        col = artifact.table.columns[name]
        if kind in ("numeric", "binary-flag"):
            arrays[f"col{i}_num"] = np.asarray(col, dtype=np.float64)
        else:
            mask = np.array([c is None for c in col], dtype=bool)
            tokens = np.array(["" if c is None else str(c) for c in col])
            arrays[f"col{i}_cat"] = tokens
            arrays[f"col{i}_mask"] = mask
    arrays["split_assignment"] = artifact.split.assignment
    if artifact.ground_truth is not None:
        arrays["ground_truth"] = np.asarray(artifact.ground_truth, dtype=np.int64)

    if artifact.fold_models is not None:
        for fm in artifact.fold_models:
            f = fm.fold
            fold_meta = {
                "fold": f,
                "reducer": fm.reducer,
                "gmm": {
                    "n": fm.mixture.n,
                    "converged": fm.mixture.converged,
                    "log_likelihood": fm.mixture.log_likelihood,
                    "seed": fm.mixture.seed,
                },
            }
            if fm.reducer == "umap":
                fold_meta["umap"] = {
                    "params": asdict(fm.umap.params),
                    "a": fm.umap.a,
                    "b": fm.umap.b,
                    "epochs_used": fm.umap.epochs_used,
                }
            else:
                arrays[f"fold{f}_pca_means"] = fm.pca.means
                arrays[f"fold{f}_pca_axes"] = fm.pca.axes
                arrays[f"fold{f}_pca_var"] = fm.pca.explained_variance
            meta["folds"].append(fold_meta)
            arrays[f"fold{f}_train_embedding"] = fm.training_embedding
            arrays[f"fold{f}_test_embedding"] = fm.test_embedding
            arrays[f"fold{f}_test_labels"] = np.asarray(
                fm.test_partition.labels, dtype=np.int64)
            arrays[f"fold{f}_gmm_weights"] = fm.mixture.weights
            arrays[f"fold{f}_gmm_means"] = fm.mixture.means
            arrays[f"fold{f}_gmm_covs"] = fm.mixture.covariances

    arrays["metadata"] = np.array(json.dumps(meta, sort_keys=True))
    buffer = io.BytesIO()
    np.savez(buffer, **arrays)
    Path(path).write_bytes(buffer.getvalue())


def _rebuild_table(meta, data) -> Table:
    schema = tuple((name, kind) for name, kind in meta["table_schema"])
    columns = {}
    row_count = None
    for i, (name, kind) in enumerate(schema):
        if kind in ("numeric", "binary-flag"):
            columns[name] = data[f"col{i}_num"]
        else:
            tokens = data[f"col{i}_cat"]
            mask = data[f"col{i}_mask"]
            col = np.empty(len(tokens), dtype=object)
            for j, (token, missing) in enumerate(zip(tokens, mask)):
                col[j] = None if missing else str(token)
            columns[name] = col
        row_count = len(columns[name])
    schema_cfg = meta["schema_config"]
    return Table(
        schema=schema,
        columns=columns,
        row_count=row_count,
        complaint_flags=tuple(schema_cfg["complaint_flags"]),
        excluded=tuple(schema_cfg["excluded"]),
    )


def load_artifact(path: str | Path) -> PipelineArtifact:
    """Load and rehydrate an artifact, recomputing the pure members."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"artifact {path} does not exist")
    try:
        handle = np.load(path, allow_pickle=False)
    except (ValueError, OSError, zipfile.BadZipFile) as exc:
        raise ParseError(f"{path}: not an artifact file ({exc})") from exc
    with handle as data:
        if "metadata" not in data:
            raise ParseError(f"{path}: not an artifact file")
        try:
            meta = json.loads(str(data["metadata"]))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: corrupt artifact metadata") from exc
        if meta.get("version") != ARTIFACT_VERSION:
            raise ParseError(
                f"{path}: artifact version {meta.get('version')} unsupported "
                f"(expected {ARTIFACT_VERSION})"
            )
        schema_config = SchemaConfig(
            kinds=meta["schema_config"]["columns"],
            excluded=tuple(meta["schema_config"]["excluded"]),
            complaint_flags=tuple(meta["schema_config"]["complaint_flags"]),
            missing_tokens=tuple(meta["schema_config"]["missing_tokens"]),
        )
        table = _rebuild_table(meta, data)
        split = SplitPlan(
            seed=meta["split"]["seed"],
            test_fraction=meta["split"]["test_fraction"],
            fold_count=meta["split"]["fold_count"],
            assignment=data["split_assignment"],
        )
        grid_raw = dict(meta["grid"])
        for key in ("n_neighbors", "min_dist", "n_clusters"):
            grid_raw[key] = tuple(grid_raw[key])
        grid = SweepGrid(**grid_raw)
        results = tuple(_result_from_json(r) for r in meta["results"])
        selected = _config_from_json(meta["selected"])
        ground_truth = data["ground_truth"] if meta["has_ground_truth"] else None

        fold_models = None
        partitions = {}
        if meta["folds"]:
            test_idx = split.test_indices
            models = []
            for fold_meta in meta["folds"]:
                f = fold_meta["fold"]
                train_idx = split.training_indices_excluding(f)
                pre = fit_preprocessor(table, train_idx)
                x_train = apply_preprocessor(pre, table, train_idx)
                labels = data[f"fold{f}_test_labels"].astype(np.intp)
                mixture = MixtureModel(
                    n=fold_meta["gmm"]["n"],
                    weights=data[f"fold{f}_gmm_weights"],
                    means=data[f"fold{f}_gmm_means"],
                    covariances=data[f"fold{f}_gmm_covs"],
                    converged=fold_meta["gmm"]["converged"],
                    log_likelihood=fold_meta["gmm"]["log_likelihood"],
                    seed=fold_meta["gmm"]["seed"],
                )
                partition = Partition(
                    labels=labels,
                    n_declared=mixture.n,
                    n_nonnull=int(len(np.unique(labels))),
                )
                if fold_meta["reducer"] == "umap":
                    umap_meta = fold_meta["umap"]
                    umap_model = UmapModel(
                        params=UmapParams(**umap_meta["params"]),
                        a=umap_meta["a"],
                        b=umap_meta["b"],
                        embedding=data[f"fold{f}_train_embedding"],
                        training=x_train,
                        epochs_used=umap_meta["epochs_used"],
                        graph=None,
                    )
                    pca_model = None
                else:
                    umap_model = None
                    pca_model = PcaModel(
                        means=data[f"fold{f}_pca_means"],
                        axes=data[f"fold{f}_pca_axes"],
                        explained_variance=data[f"fold{f}_pca_var"],
                    )
                models.append(FoldModel(
                    fold=f,
                    training_rows=train_idx,
                    preprocessor=pre,
                    reducer=fold_meta["reducer"],
                    umap=umap_model,
                    pca=pca_model,
                    mixture=mixture,
                    training_embedding=data[f"fold{f}_train_embedding"],
                    test_embedding=data[f"fold{f}_test_embedding"],
                    test_partition=partition,
                ))
            fold_models = tuple(models)
            if selected is not None:
                partitions[selected] = tuple(fm.test_partition
                                             for fm in fold_models)
            del test_idx

    report = SweepReport(
        seed=meta["seed"],
        grid=grid,
        results=results,
        selected=selected,
        test_rows=split.test_indices,
        partitions=partitions,
    )
    sweep_result = SweepResult(
        report=report,
        fold_models=fold_models,
        primary_fold=meta["primary_fold"],
    )
    return build_artifact(
        schema_config=schema_config,
        table=table,
        split=split,
        sweep_result=sweep_result,
        seed=meta["seed"],
        outcome_column=meta["outcome_column"],
        complaint=meta["complaint"],
        ground_truth=ground_truth,
    )
