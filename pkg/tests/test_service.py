"""HTTP service: endpoint payloads, error taxonomy, embed consistency."""

import math
from dataclasses import replace

import numpy as np
import pytest
from fastapi.testclient import TestClient

from conftest import make_blobs
from phenomap.artifact import build_artifact
from phenomap.service import MAX_PAGE_SIZE, create_app
from phenomap.sweep import SweepGrid, SweepResult, run_sweep
from phenomap.tabular import SchemaConfig, Table, make_split


@pytest.fixture(scope="module")
def fitted():
    """Artifact over mixed-kind columns: numeric, categorical, flag, outcome."""
    centers = np.zeros((2, 4))
    centers[0, :] = 5.0
    centers[1, :] = -5.0
    x, y = make_blobs(70, centers, scale=1.0, seed=21)
    n = len(y)
    rng = np.random.default_rng(3)
    site = np.empty(n, dtype=object)
    site[:] = rng.choice(["north", "south"], size=n)
    flag = rng.integers(0, 2, size=n).astype(np.float64)
    outcome = (y == 1).astype(np.float64)
    schema = tuple((f"f{j}", "numeric") for j in range(4)) + (
        ("site", "categorical"), ("flag", "binary-flag"),
        ("admitted", "numeric"))
    columns = {f"f{j}": x[:, j].copy() for j in range(4)}
    columns.update(site=site, flag=flag, admitted=outcome)
    table = Table(schema=schema, columns=columns, row_count=n,
                  excluded=("admitted",))
    split = make_split(table, seed=4)
    grid = SweepGrid(n_neighbors=(10,), min_dist=(0.1,), n_clusters=(2,),
                     epochs=60)
    res = run_sweep(table, split, grid, seed=8, ground_truth=y)
    artifact = build_artifact(
        SchemaConfig(kinds={"site": "categorical", "flag": "binary-flag"},
                     excluded=("admitted",)),
        table, split, res, seed=8,
        outcome_column="admitted", complaint="shortness of breath",
        ground_truth=y,
    )
    return artifact


@pytest.fixture(scope="module")
def client(fitted):
    return TestClient(create_app(fitted))


@pytest.fixture(scope="module")
def primary(fitted):
    return next(fm for fm in fitted.fold_models
                if fm.fold == fitted.primary_fold)


def record_payload(table, row):
    """Rebuild the JSON payload for one raw table row."""
    payload = {}
    for name, kind in table.schema:
        if name in table.excluded:
            continue
        value = table.column(name)[row]
        if kind == "categorical":
            payload[name] = None if value is None else str(value)
        else:
            payload[name] = None if math.isnan(value) else float(value)
    return payload


class TestSchema:
    def test_descriptor_covers_every_feature_kind(self, client, fitted):
        body = client.get("/api/schema").json()
        assert body["outcome_column"] == "admitted"
        assert body["complaint"] == "shortness of breath"
        assert body["seed"] == fitted.seed
        assert body["primary_fold"] == fitted.primary_fold
        assert body["n_clusters"] == 2
        fields = {f["name"]: f for f in body["fields"]}
        assert set(fields) == {"f0", "f1", "f2", "f3", "site", "flag"}
        assert fields["f0"]["kind"] == "numeric"
        for key in ("minimum", "maximum", "typical"):
            assert isinstance(fields["f0"][key], float)
        assert fields["site"]["kind"] == "categorical"
        assert set(fields["site"]["values"]) >= {"north", "south"}
        assert fields["flag"]["kind"] == "binary-flag"
        assert "values" not in fields["f0"]

    def test_excluded_column_not_a_field(self, client):
        body = client.get("/api/schema").json()
        assert "admitted" not in {f["name"] for f in body["fields"]}


class TestPoints:
    def test_first_page_matches_stored_embedding(self, client, fitted, primary):
        body = client.get("/api/points").json()
        test_rows = fitted.split.test_indices
        assert body["total"] == len(test_rows)
        assert body["page"] == 0
        assert len(body["points"]) == len(test_rows)  # fits in one page
        for i in (0, len(test_rows) - 1):
            point = body["points"][i]
            assert point["row"] == int(test_rows[i])
            assert point["x"] == float(primary.test_embedding[i, 0])
            assert point["y"] == float(primary.test_embedding[i, 1])
            assert point["cluster"] == int(primary.test_partition.labels[i])
            assert point["truth"] == int(fitted.ground_truth[test_rows[i]])

    def test_pagination_partitions_the_rows(self, client, fitted):
        total = len(fitted.split.test_indices)
        size = 7
        pages = -(-total // size)
        seen = []
        for page in range(pages):
            body = client.get(f"/api/points?page={page}&page_size={size}").json()
            assert body["pages"] == pages
            seen.extend(p["row"] for p in body["points"])
        assert seen == [int(r) for r in fitted.split.test_indices]

    def test_page_past_the_end_is_empty(self, client):
        body = client.get("/api/points?page=9999&page_size=10").json()
        assert body["points"] == []

    def test_page_size_clamped(self, client):
        body = client.get(f"/api/points?page_size={MAX_PAGE_SIZE * 10}").json()
        assert body["page_size"] == MAX_PAGE_SIZE

    def test_negative_page_rejected(self, client):
        resp = client.get("/api/points?page=-1")
        assert resp.status_code == 422
        assert resp.json()["code"] == "bad-parameter"

    def test_zero_page_size_rejected(self, client):
        resp = client.get("/api/points?page_size=0")
        assert resp.status_code == 422


class TestClusters:
    def test_summary_fields(self, client):
        body = client.get("/api/clusters").json()
        assert len(body["clusters"]) == 2
        for cluster in body["clusters"]:
            assert isinstance(cluster["cluster"], int)
            assert 0.0 < cluster["share"] < 1.0
            assert cluster["share_ci"][0] <= cluster["share_mean"] <= cluster["share_ci"][1]
            assert cluster["admit_rate"] is not None
            assert len(cluster["admit_rate"]["ci"]) == 2
            assert cluster["top_features"]
            first = cluster["top_features"][0]
            assert set(first) == {"feature", "difference"}

    def test_top_truncates(self, client):
        body = client.get("/api/clusters?top=1").json()
        assert all(len(c["top_features"]) == 1 for c in body["clusters"])
        body = client.get("/api/clusters?top=0").json()
        assert all(c["top_features"] == [] for c in body["clusters"])

    def test_negative_top_rejected(self, client):
        assert client.get("/api/clusters?top=-1").status_code == 422


class TestEmbed:
    def test_stored_test_row_lands_on_its_stored_coordinates(
            self, client, fitted, primary):
        test_rows = fitted.split.test_indices
        for pos in (0, 5):
            row = int(test_rows[pos])
            resp = client.post("/api/embed",
                               json=record_payload(fitted.table, row))
            assert resp.status_code == 200
            body = resp.json()
            assert body["x"] == float(primary.test_embedding[pos, 0])
            assert body["y"] == float(primary.test_embedding[pos, 1])
            assert body["cluster"] == int(primary.test_partition.labels[pos])

    def test_responsibilities_normalized_and_profile_attached(
            self, client, fitted):
        row = int(fitted.split.test_indices[1])
        body = client.post("/api/embed",
                           json=record_payload(fitted.table, row)).json()
        assert sum(body["responsibilities"]) == pytest.approx(1.0, abs=1e-9)
        assert len(body["responsibilities"]) == 2
        assert body["profile"]["cluster"] == body["cluster"]
        assert body["profile"]["top_features"]

    def test_repeat_submission_is_identical(self, client, fitted):
        payload = record_payload(fitted.table, int(fitted.split.test_indices[2]))
        first = client.post("/api/embed", json=payload).json()
        second = client.post("/api/embed", json=payload).json()
        assert first == second

    def test_empty_record_imputes_and_warns(self, client):
        resp = client.post("/api/embed", json={})
        assert resp.status_code == 200
        body = resp.json()
        kinds = {w["kind"] for w in body["warnings"]}
        assert "imputed" in kinds
        assert isinstance(body["x"], float)

    def test_unseen_category_warns(self, client):
        resp = client.post("/api/embed", json={"site": "mars"})
        assert resp.status_code == 200
        warnings = resp.json()["warnings"]
        assert any(w["kind"] == "unseen-category" and w["column"] == "site"
                   for w in warnings)

    def test_excluded_column_accepted_and_ignored(self, client, fitted):
        payload = record_payload(fitted.table, int(fitted.split.test_indices[0]))
        baseline = client.post("/api/embed", json=payload).json()
        payload["admitted"] = 1.0
        with_outcome = client.post("/api/embed", json=payload).json()
        assert with_outcome == baseline

    def test_malformed_json_is_400(self, client):
        resp = client.post("/api/embed", content=b"{oops",
                           headers={"content-type": "application/json"})
        assert resp.status_code == 400
        assert resp.json()["code"] == "malformed-json"

    def test_non_object_body_is_400(self, client):
        resp = client.post("/api/embed", json=[1, 2, 3])
        assert resp.status_code == 400
        assert resp.json()["code"] == "malformed-body"

    def test_unknown_field_is_422_with_field_list(self, client):
        resp = client.post("/api/embed", json={"bogus": 1, "f0": 0.5})
        assert resp.status_code == 422
        body = resp.json()
        assert body["code"] == "unknown-field"
        assert body["fields"] == ["bogus"]

    def test_wrong_types_are_422_with_field_list(self, client):
        resp = client.post("/api/embed", json={"f0": "tall", "flag": 7,
                                               "site": 3})
        assert resp.status_code == 422
        body = resp.json()
        assert body["code"] == "type-error"
        assert sorted(body["fields"]) == ["f0", "flag", "site"]

    def test_boolean_is_not_a_number(self, client):
        resp = client.post("/api/embed", json={"f0": True})
        assert resp.status_code == 422

    def test_boolean_flag_accepted(self, client):
        resp = client.post("/api/embed", json={"flag": True})
        assert resp.status_code == 200


class TestNoArtifact:
    def test_every_endpoint_is_503(self):
        bare = TestClient(create_app(None))
        for call in (lambda c: c.get("/api/schema"),
                     lambda c: c.get("/api/points"),
                     lambda c: c.get("/api/clusters"),
                     lambda c: c.post("/api/embed", json={})):
            resp = call(bare)
            assert resp.status_code == 503
            assert resp.json()["code"] == "no-artifact"


def test_unstable_artifact_refused(fitted):
    doctored = build_artifact(
        schema_config=fitted.schema_config,
        table=fitted.table,
        split=fitted.split,
        sweep_result=SweepResult(
            report=replace(fitted.report, selected=None, partitions={}),
            fold_models=None, primary_fold=None),
        seed=fitted.seed,
    )
    with pytest.raises(ValueError, match="no stable clustering"):
        create_app(doctored)
