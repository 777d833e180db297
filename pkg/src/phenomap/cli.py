"""Command-line pipeline driver.

Subcommands: ``synth`` (synthetic benchmark CSV), ``sweep`` (full
pipeline: split, hyperparameter sweep, stability selection, artifact),
``transform`` (project new records through a saved artifact),
``characterize`` (cluster profile report), ``export-plot`` (scatter and
ARI-curve data files), ``serve`` (HTTP service over an artifact).

Exit codes: 0 success, 2 usage, 3 data error, 4 numerical failure,
5 no stable clustering.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .artifact import PipelineArtifact, build_artifact, load_artifact, save_artifact
from .errors import (ConfigError, NumericalError, ParameterError, ParseError,
                     SchemaError)
from .gmm import predict, responsibilities
from .preprocess import apply_preprocessor_with_warnings
from .seeds import derive_seed
from .sweep import SweepGrid, run_sweep, write_report
from .synthetic import SyntheticSpec, generate_synthetic
from .tabular import SchemaConfig, filter_by_complaint, load_csv, make_split

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4
EXIT_NO_STABLE = 5

LABEL_COLUMN = "class"  # ground-truth column written by synth

TRANSFORM_VERSION = "phenomap-transform v1"
PROFILES_VERSION = "phenomap-profiles v1"
POINTS_VERSION = "phenomap-points v1"
CURVES_VERSION = "phenomap-ari-curves v1"


def _f(value: float) -> str:
    # repr round-trips float64 exactly, so identical runs give identical files
    return repr(float(value))


def _int_list(text: str) -> list[int]:
    """Comma-separated ints; 'a-b' tokens expand to inclusive ranges."""
    out: list[int] = []
    for token in text.split(","):
        token = token.strip()
        if "-" in token[1:]:
            lo, hi = token.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(token))
    return out


def _float_list(text: str) -> list[float]:
    return [float(token) for token in text.split(",")]


def cmd_synth(args) -> int:
    spec = SyntheticSpec(
        sample_count=args.samples,
        feature_count=args.features,
        informative_count=args.informative,
        class_count=args.classes,
        class_separation=args.sep,
        redundant_count=args.redundant,
        seed=args.seed,
    )
    table, labels = generate_synthetic(spec)
    names = [name for name, _ in table.schema]
    columns = [table.column(name) for name in names]
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names + [LABEL_COLUMN])
        for i in range(table.row_count):
            writer.writerow([_f(col[i]) for col in columns] + [str(int(labels[i]))])
    print(f"wrote {table.row_count} rows x {len(names)} features "
          f"({spec.class_count} classes) to {args.output}")
    return EXIT_OK


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path}: expected a JSON object")
    return raw


_SWEEP_DEFAULTS = {
    "reducer": "umap",
    "neighbors": [2, 15, 150],
    "min_dist": [0.0, 0.1, 0.25],
    "clusters": list(range(2, 21)),
    "epochs": None,
    "negative_sample_rate": 5,
    "learning_rate": 1.0,
    "parallel_sgd": False,
    "threads": 1,
    "test_fraction": 0.2,
    "folds": 5,
    "seed": 0,
}


def _merged(args, config: dict, key: str):
    """Flag > config file > default."""
    flag = getattr(args, key)
    if flag is not None:
        return flag
    if key in config:
        return config[key]
    return _SWEEP_DEFAULTS[key]


def cmd_sweep(args) -> int:
    config = _load_config_file(args.config)
    unknown = set(config) - set(_SWEEP_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    schema_config = (SchemaConfig.from_json(args.schema)
                     if args.schema else SchemaConfig())
    # Outcome and ground-truth columns must never reach a feature matrix.
    forced_excluded = [c for c in (args.outcome_column, args.ground_truth_column)
                       if c is not None]
    if forced_excluded:
        schema_config = SchemaConfig(
            kinds=schema_config.kinds,
            excluded=tuple(dict.fromkeys(
                schema_config.excluded + tuple(forced_excluded))),
            complaint_flags=schema_config.complaint_flags,
            missing_tokens=schema_config.missing_tokens,
        )

    table = load_csv(args.data, schema_config)
    if args.complaint is not None:
        table = filter_by_complaint(table, args.complaint)
        if table.row_count == 0:
            raise ParseError(f"no rows flagged for complaint {args.complaint!r}")

    ground_truth = None
    if args.ground_truth_column is not None:
        col = table.column(args.ground_truth_column)
        if table.kind_of(args.ground_truth_column) == "categorical":
            raise SchemaError(
                f"ground-truth column {args.ground_truth_column!r} must be numeric")
        values = np.asarray(col, dtype=np.float64)
        if np.isnan(values).any():
            raise SchemaError(
                f"ground-truth column {args.ground_truth_column!r} has missing values")
        ground_truth = values.astype(np.int64)

    if args.outcome_column is not None:
        kind = table.kind_of(args.outcome_column)
        if kind == "categorical":
            raise SchemaError(
                f"outcome column {args.outcome_column!r} must be numeric 0/1")

    seed = _merged(args, config, "seed")
    grid = SweepGrid(
        reducer=_merged(args, config, "reducer"),
        n_neighbors=tuple(_merged(args, config, "neighbors")),
        min_dist=tuple(_merged(args, config, "min_dist")),
        n_clusters=tuple(_merged(args, config, "clusters")),
        epochs=_merged(args, config, "epochs"),
        negative_sample_rate=_merged(args, config, "negative_sample_rate"),
        learning_rate=_merged(args, config, "learning_rate"),
        parallel_sgd=bool(_merged(args, config, "parallel_sgd")),
    )
    split = make_split(
        table,
        seed=derive_seed(seed, "split"),
        test_fraction=_merged(args, config, "test_fraction"),
        fold_count=_merged(args, config, "folds"),
    )
    result = run_sweep(
        table, split, grid, seed,
        threads=_merged(args, config, "threads"),
        ground_truth=ground_truth,
    )

    report_path = args.report or str(Path(args.artifact).with_suffix(".report.tsv"))
    write_report(result.report, report_path)
    artifact = build_artifact(
        schema_config=schema_config,
        table=table,
        split=split,
        sweep_result=result,
        seed=seed,
        outcome_column=args.outcome_column,
        complaint=args.complaint,
        ground_truth=ground_truth,
    )
    save_artifact(artifact, args.artifact)
    print(f"report: {report_path}")
    print(f"artifact: {args.artifact}")
    if result.report.selected is None:
        print("no stable clustering: no configuration passed the validity rule",
              file=sys.stderr)
        return EXIT_NO_STABLE
    sel = result.report.selected
    print(f"selected: reducer={sel.reducer} n_neighbors={sel.n_neighbors} "
          f"min_dist={sel.min_dist} n_clusters={sel.n_clusters}")
    return EXIT_OK


def _require_stable(artifact: PipelineArtifact, what: str) -> int | None:
    if artifact.stable:
        return None
    print(f"artifact carries no stable clustering; cannot {what}",
          file=sys.stderr)
    return EXIT_NO_STABLE


def _records_schema(artifact: PipelineArtifact, records_path: str) -> SchemaConfig:
    """The artifact's schema restricted to columns present in the records.

    Outcome and complaint columns are optional for prospective records;
    feature-column mismatches surface later as listing errors.
    """
    with open(records_path, "r", encoding="utf-8", newline="") as fh:
        header_line = fh.readline()
    header = {h.strip() for h in next(csv.reader([header_line]), [])}
    base = artifact.schema_config
    feature_kinds = {name: kind for name, kind in artifact.table.schema}
    kinds = {c: k for c, k in {**feature_kinds, **dict(base.kinds)}.items()
             if c in header}
    return SchemaConfig(
        kinds=kinds,
        excluded=tuple(c for c in base.excluded if c in header),
        complaint_flags=tuple(c for c in base.complaint_flags if c in header),
        missing_tokens=base.missing_tokens,
    )


def cmd_transform(args) -> int:
    artifact = load_artifact(args.artifact)
    bad = _require_stable(artifact, "transform records")
    if bad is not None:
        return bad
    records = load_csv(args.records, _records_schema(artifact, args.records))
    rows = np.arange(records.row_count)
    n = artifact.report.selected.n_clusters

    lines = [f"# {TRANSFORM_VERSION}",
             f"# seed={artifact.seed}",
             f"# folds={len(artifact.fold_models)}",
             f"# primary-fold={artifact.primary_fold}",
             "\t".join(["record", "fold", "primary", "x", "y", "label"]
                       + [f"resp{k}" for k in range(n)])]
    warned: set[tuple] = set()
    for fm in artifact.fold_models:
        matrix, warnings = apply_preprocessor_with_warnings(
            fm.preprocessor, records, rows)
        for row_warnings in warnings:
            for w in row_warnings:
                if w not in warned:
                    warned.add(w)
                    log.warning("%s in column %r: %s", *w)
        coords = fm.embed(matrix)
        part = predict(fm.mixture, coords)
        resp = responsibilities(fm.mixture, coords)
        primary = "1" if fm.fold == artifact.primary_fold else "0"
        for i in range(len(coords)):
            lines.append("\t".join(
                [str(i), str(fm.fold), primary,
                 _f(coords[i, 0]), _f(coords[i, 1]), str(int(part.labels[i]))]
                + [_f(resp[i, k]) for k in range(n)]))

    text = "\n".join(lines) + "\n"
    if args.output == "-":
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text, encoding="utf-8")
        print(f"wrote {records.row_count} records x "
              f"{len(artifact.fold_models)} fold-models to {args.output}")
    return EXIT_OK


def _format_features(pairs, top: int) -> str:
    return ";".join(f"{name}={_f(diff)}" for name, diff in pairs[:top])


def cmd_characterize(args) -> int:
    artifact = load_artifact(args.artifact)
    bad = _require_stable(artifact, "characterize clusters")
    if bad is not None:
        return bad
    summary = artifact.summary
    lines = [f"# {PROFILES_VERSION}",
             f"# seed={artifact.seed}",
             f"# primary-fold={artifact.primary_fold}",
             "[fold-profiles]",
             "\t".join(("fold", "cluster", "members", "share", "top_features"))]
    for fold, profiles in enumerate(artifact.profiles):
        for p in profiles:
            lines.append("\t".join((
                str(fold), str(p.cluster_id), str(p.member_count),
                _f(p.share), _format_features(p.differences, args.top))))
    lines.append("[matched]")
    lines.append("\t".join((
        "summary", "fold_clusters", "share_mean", "share_lo", "share_hi",
        "admit_mean", "admit_lo", "admit_hi", "members_mean", "top_features")))
    for mc in summary.clusters:
        fold_ids = ",".join("-" if c is None else str(c)
                            for c in mc.fold_cluster_ids)
        if mc.admit_rate_mean is None:
            admit = ("-", "-", "-")
        else:
            admit = (_f(mc.admit_rate_mean), _f(mc.admit_rate_ci[0]),
                     _f(mc.admit_rate_ci[1]))
        lines.append("\t".join((
            str(mc.summary_id), fold_ids,
            _f(mc.share_mean), _f(mc.share_ci[0]), _f(mc.share_ci[1]),
            *admit, _f(mc.member_count_mean),
            _format_features(mc.differences, args.top))))
    if summary.unmatched:
        lines.append("[unmatched]")
        lines.append("\t".join(("fold", "cluster", "share")))
        for fold, cluster, share in summary.unmatched:
            lines.append("\t".join((str(fold), str(cluster), _f(share))))

    text = "\n".join(lines) + "\n"
    if args.output == "-":
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text, encoding="utf-8")
        print(f"wrote profiles for {len(summary.clusters)} matched clusters "
              f"to {args.output}")
    return EXIT_OK


def cmd_export_plot(args) -> int:
    artifact = load_artifact(args.artifact)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    curve_lines = [f"# {CURVES_VERSION}",
                   f"# seed={artifact.seed}",
                   "\t".join(("reducer", "n_neighbors", "min_dist", "n_clusters",
                              "mean_pairwise_ari", "valid", "selected",
                              "ground_truth_ari"))]
    selected = artifact.report.selected
    for r in artifact.report.results:
        curve_lines.append("\t".join((
            r.config.reducer, str(r.config.n_neighbors),
            _f(r.config.min_dist), str(r.config.n_clusters),
            "-" if r.mean_pairwise_ari is None else _f(r.mean_pairwise_ari),
            "1" if r.valid else "0",
            "1" if selected is not None and r.config == selected else "0",
            "-" if r.ground_truth_ari is None else _f(r.ground_truth_ari))))
    (outdir / "ari_curves.tsv").write_text("\n".join(curve_lines) + "\n",
                                           encoding="utf-8")
    written = ["ari_curves.tsv"]

    bad = _require_stable(artifact, "export scatter data")
    if bad is not None:
        return bad

    truth = artifact.ground_truth
    test_idx = artifact.split.test_indices
    header = ["x", "y", "cluster", "role"] + (["truth"] if truth is not None else [])
    for fm in artifact.fold_models:
        train_part = predict(fm.mixture, fm.training_embedding)
        for role, coords, labels, rows in (
            ("train", fm.training_embedding, train_part.labels, fm.training_rows),
            ("test", fm.test_embedding, fm.test_partition.labels, test_idx),
        ):
            lines = [f"# {POINTS_VERSION}",
                     f"# fold={fm.fold}", f"# role={role}",
                     "\t".join(header)]
            for i in range(len(coords)):
                cells = [_f(coords[i, 0]), _f(coords[i, 1]),
                         str(int(labels[i])), role]
                if truth is not None:
                    cells.append(str(int(truth[rows[i]])))
                lines.append("\t".join(cells))
            name = f"fold{fm.fold}_{role}.tsv"
            (outdir / name).write_text("\n".join(lines) + "\n", encoding="utf-8")
            written.append(name)

    print(f"wrote {len(written)} files to {outdir}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    artifact = load_artifact(args.artifact)
    bad = _require_stable(artifact, "serve")
    if bad is not None:
        return bad
    app = create_app(artifact, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phenomap",
        description="Stable 2D phenotype maps for tabular visit data",
    )
    parser.add_argument("--version", action="version",
                        version=f"phenomap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a labeled synthetic benchmark CSV")
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--features", type=int, required=True)
    p.add_argument("--informative", type=int, required=True)
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--sep", type=float, required=True,
                   help="class separation (hypercube half-width)")
    p.add_argument("--redundant", type=int, default=0,
                   help="features that are linear combinations of informative ones")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="CSV path to write")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser(
        "sweep",
        help="split, sweep the hyperparameter grid, select, save artifact")
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--schema", help="schema config JSON")
    p.add_argument("--config", help="sweep config JSON (flags override it)")
    p.add_argument("--reducer", choices=("umap", "pca"))
    p.add_argument("--neighbors", type=_int_list, metavar="N[,N...]",
                   help="n_neighbors grid (default 2,15,150)")
    p.add_argument("--min-dist", dest="min_dist", type=_float_list,
                   metavar="D[,D...]", help="min_dist grid (default 0.0,0.1,0.25)")
    p.add_argument("--clusters", type=_int_list, metavar="N[,N|A-B...]",
                   help="cluster counts, e.g. 2-20 (default)")
    p.add_argument("--epochs", type=int, help="layout epochs (default by size)")
    p.add_argument("--negative-sample-rate", dest="negative_sample_rate", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--parallel-sgd", dest="parallel_sgd", action="store_const",
                   const=True, help="multi-threaded SGD; embeddings become "
                   "run-to-run nondeterministic")
    p.add_argument("--threads", type=int, help="sweep task threads (default 1)")
    p.add_argument("--test-fraction", dest="test_fraction", type=float)
    p.add_argument("--folds", type=int, help="training fold count (default 5)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--complaint", help="binary-flag column to filter rows by")
    p.add_argument("--outcome-column", dest="outcome_column",
                   help="0/1 outcome column, reporting only, never a feature")
    p.add_argument("--ground-truth-column", dest="ground_truth_column",
                   help="integer label column for benchmark ARI, never a feature")
    p.add_argument("--artifact", required=True, help="artifact path to write")
    p.add_argument("--report", help="report path (default: artifact with "
                   ".report.tsv suffix)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("transform",
                       help="project new records through a saved artifact")
    p.add_argument("--artifact", required=True)
    p.add_argument("--records", required=True, help="CSV of records to project")
    p.add_argument("--output", default="-", help="output path ('-' = stdout)")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("characterize", help="cluster profile report")
    p.add_argument("--artifact", required=True)
    p.add_argument("--top", type=int, default=10,
                   help="distinguishing features listed per cluster")
    p.add_argument("--output", default="-", help="output path ('-' = stdout)")
    p.set_defaults(func=cmd_characterize)

    p = sub.add_parser("export-plot", help="write scatter and ARI-curve data files")
    p.add_argument("--artifact", required=True)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_export_plot)

    p = sub.add_parser("serve", help="HTTP service over a saved artifact")
    p.add_argument("--artifact", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui", help="static UI directory to mount at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ParseError, SchemaError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
