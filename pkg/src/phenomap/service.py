"""Read-only HTTP layer over a loaded pipeline artifact.

Endpoints (JSON, versioned under /api):
  GET  /api/schema    form descriptor for patient-record entry
  GET  /api/points    embedded test-set points, paginated, stable order
  GET  /api/clusters  matched cluster summaries (share, CI, admit rate)
  POST /api/embed     project one record: coordinates, label,
                      responsibilities, profile, warnings

Coordinates and labels come from the artifact's primary fold-model, so
/api/embed agrees with the transform command's primary-fold rows. Error
bodies carry a machine-readable ``code``. Malformed JSON is 400; unknown
fields and type errors are 422; a missing artifact is 503 everywhere.
"""

from __future__ import annotations

import json
import math

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import __version__
from .artifact import PipelineArtifact
from .gmm import predict, responsibilities
from .preprocess import apply_preprocessor_with_warnings
from .tabular import Table

MAX_PAGE_SIZE = 5000
DEFAULT_PAGE_SIZE = 1000
DEFAULT_TOP_FEATURES = 10


def _error(status: int, code: str, detail: str, fields=None) -> JSONResponse:
    body = {"code": code, "detail": detail}
    if fields:
        body["fields"] = list(fields)
    return JSONResponse(status_code=status, content=body)


def _primary_model(artifact: PipelineArtifact):
    for fm in artifact.fold_models:
        if fm.fold == artifact.primary_fold:
            return fm
    raise LookupError(f"primary fold {artifact.primary_fold} not in artifact")


def _features(pairs, top: int) -> list[dict]:
    return [{"feature": name, "difference": float(diff)}
            for name, diff in pairs[:top]]


def _cluster_payload(artifact: PipelineArtifact, top: int) -> list[dict]:
    primary_profiles = {p.cluster_id: p
                        for p in artifact.profiles[artifact.primary_fold]}
    out = []
    for mc in artifact.summary.clusters:
        cluster_id = mc.fold_cluster_ids[artifact.primary_fold]
        profile = primary_profiles.get(cluster_id)
        admit = None
        if mc.admit_rate_mean is not None:
            admit = {
                "mean": float(mc.admit_rate_mean),
                "ci": [float(mc.admit_rate_ci[0]), float(mc.admit_rate_ci[1])],
            }
        out.append({
            "cluster": int(cluster_id),
            "share": None if profile is None else float(profile.share),
            "member_count": None if profile is None else int(profile.member_count),
            "share_mean": float(mc.share_mean),
            "share_ci": [float(mc.share_ci[0]), float(mc.share_ci[1])],
            "admit_rate": admit,
            "member_count_mean": float(mc.member_count_mean),
            "top_features": _features(mc.differences, top),
        })
    return out


def _coerce_numeric(name: str, value) -> tuple[float | None, str | None]:
    if value is None:
        return math.nan, None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return None, f"{name}: expected a number, got {type(value).__name__}"
    if math.isinf(value) or (isinstance(value, float) and math.isnan(value)):
        return None, f"{name}: expected a finite number"
    return float(value), None


def _coerce_flag(name: str, value) -> tuple[float | None, str | None]:
    if value is None:
        return 0.0, None
    if isinstance(value, bool):
        return (1.0 if value else 0.0), None
    if isinstance(value, (int, float)) and value in (0, 1):
        return float(value), None
    return None, f"{name}: expected 0 or 1"


def _coerce_categorical(name: str, value):
    if value is None:
        return None, None
    if isinstance(value, str):
        return value, None
    return None, f"{name}: expected a string, got {type(value).__name__}"


def _record_table(schema, payload: dict) -> tuple[Table | None, list[str]]:
    columns = {}
    errors: list[str] = []
    for name, kind in schema:
        value = payload.get(name)
        if kind == "numeric":
            coerced, err = _coerce_numeric(name, value)
        elif kind == "binary-flag":
            coerced, err = _coerce_flag(name, value)
        else:
            coerced, err = _coerce_categorical(name, value)
        if err is not None:
            errors.append(err)
            continue
        if kind == "categorical":
            col = np.empty(1, dtype=object)
            col[0] = coerced
            columns[name] = col
        else:
            columns[name] = np.array([coerced], dtype=np.float64)
    if errors:
        return None, errors
    return Table(schema=schema, columns=columns, row_count=1), []


def create_app(artifact: PipelineArtifact | None,
               ui_dir: str | None = None) -> FastAPI:
    """Build the app. ``artifact=None`` serves 503s on every endpoint."""
    app = FastAPI(title="phenomap service", version=__version__,
                  docs_url="/docs", openapi_url="/openapi.json")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET", "POST"],
        allow_headers=["*"],
    )

    if artifact is not None and not artifact.stable:
        raise ValueError("artifact carries no stable clustering; nothing to serve")

    primary = None if artifact is None else _primary_model(artifact)
    if artifact is not None:
        test_rows = artifact.split.test_indices
        coords = primary.test_embedding
        labels = primary.test_partition.labels
        truth = artifact.ground_truth

    def _unavailable() -> JSONResponse:
        return _error(503, "no-artifact", "no artifact is loaded")

    @app.get("/api/schema")
    def get_schema():
        if artifact is None:
            return _unavailable()
        fields = []
        for name, kind in primary.preprocessor.feature_schema:
            entry: dict = {"name": name, "kind": kind}
            if kind in ("numeric", "binary-flag"):
                stats = primary.preprocessor.numeric[name]
                entry["minimum"] = float(stats.minimum)
                entry["maximum"] = float(stats.maximum)
                entry["typical"] = float(stats.impute)
            else:
                entry["values"] = list(primary.preprocessor.categorical[name].vocabulary)
            fields.append(entry)
        return {
            "tool_version": artifact.tool_version,
            "seed": artifact.seed,
            "complaint": artifact.complaint,
            "outcome_column": artifact.outcome_column,
            "n_clusters": primary.mixture.n,
            "primary_fold": artifact.primary_fold,
            "fields": fields,
        }

    @app.get("/api/points")
    def get_points(page: int = 0, page_size: int = DEFAULT_PAGE_SIZE):
        if artifact is None:
            return _unavailable()
        if page < 0:
            return _error(422, "bad-parameter", "page must be >= 0")
        if page_size < 1:
            return _error(422, "bad-parameter", "page_size must be >= 1")
        page_size = min(page_size, MAX_PAGE_SIZE)
        total = len(test_rows)
        start = page * page_size
        stop = min(start + page_size, total)
        points = []
        for i in range(start, stop):
            point = {
                "row": int(test_rows[i]),
                "x": float(coords[i, 0]),
                "y": float(coords[i, 1]),
                "cluster": int(labels[i]),
            }
            if truth is not None:
                point["truth"] = int(truth[test_rows[i]])
            points.append(point)
        return {
            "total": total,
            "page": page,
            "page_size": page_size,
            "pages": max(1, -(-total // page_size)),
            "points": points,
        }

    @app.get("/api/clusters")
    def get_clusters(top: int = DEFAULT_TOP_FEATURES):
        if artifact is None:
            return _unavailable()
        if top < 0:
            return _error(422, "bad-parameter", "top must be >= 0")
        return {"primary_fold": artifact.primary_fold,
                "clusters": _cluster_payload(artifact, top)}

    @app.post("/api/embed")
    async def embed(request: Request):
        if artifact is None:
            return _unavailable()
        body = await request.body()
        try:
            payload = json.loads(body)
        except ValueError:
            return _error(400, "malformed-json", "request body is not valid JSON")
        if not isinstance(payload, dict):
            return _error(400, "malformed-body",
                          "expected a JSON object of field values")

        known = set(artifact.table.column_names)
        unknown = sorted(set(payload) - known)
        if unknown:
            return _error(422, "unknown-field",
                          f"unknown fields: {', '.join(unknown)}",
                          fields=unknown)

        record, errors = _record_table(primary.preprocessor.feature_schema,
                                       payload)
        if errors:
            return _error(422, "type-error", "; ".join(errors),
                          fields=[e.split(":", 1)[0] for e in errors])

        matrix, row_warnings = apply_preprocessor_with_warnings(
            primary.preprocessor, record, [0])
        xy = primary.embed(matrix)
        part = predict(primary.mixture, xy)
        resp = responsibilities(primary.mixture, xy)
        label = int(part.labels[0])
        profile = next((c for c in _cluster_payload(artifact, DEFAULT_TOP_FEATURES)
                        if c["cluster"] == label), None)
        return {
            "x": float(xy[0, 0]),
            "y": float(xy[0, 1]),
            "cluster": label,
            "responsibilities": [float(r) for r in resp[0]],
            "profile": profile,
            "warnings": [
                {"kind": kind, "column": column, "detail": detail}
                for kind, column, detail in row_warnings[0]
            ],
        }

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
