"""
The HTTP layer, driven in-process
=================================

`phenomap serve` wraps a fitted artifact in a small JSON API. This demo
drives the same app object through the test client, so it runs without
opening a port: fetch the form schema, page through the embedded test
set, and project a what-if record twice to see that the answer does not
wobble.
"""

from fastapi.testclient import TestClient

from phenomap.artifact import build_artifact
from phenomap.service import create_app
from phenomap.sweep import SweepGrid, run_sweep
from phenomap.synthetic import SyntheticSpec, generate_synthetic
from phenomap.tabular import SchemaConfig, make_split

table, truth = generate_synthetic(SyntheticSpec(
    sample_count=700, feature_count=8, informative_count=5,
    class_count=2, class_separation=4.0, seed=23))
split = make_split(table, seed=1)
result = run_sweep(table, split,
                   SweepGrid(n_neighbors=(15,), min_dist=(0.1,),
                             n_clusters=(2,), epochs=120),
                   seed=2, ground_truth=truth)
artifact = build_artifact(SchemaConfig(), table, split, result, seed=2,
                          ground_truth=truth)

client = TestClient(create_app(artifact))

schema = client.get("/api/schema").json()
print(f"form fields: {[f['name'] for f in schema['fields']]}")
print(f"clusters in the primary fold-model: {schema['n_clusters']}")

points = client.get("/api/points?page_size=50").json()
print(f"test set holds {points['total']} points "
      f"({points['pages']} pages of 50)")

# a what-if record: take the typical value for every field, nudge one
record = {f["name"]: f["typical"] for f in schema["fields"]}
record[schema["fields"][0]["name"]] += 1.0
first = client.post("/api/embed", json=record).json()
second = client.post("/api/embed", json=record).json()
print(f"record lands at ({first['x']:.3f}, {first['y']:.3f}) "
      f"in cluster {first['cluster']}")
print(f"asking again gives the same answer: {first == second}")

# the service validates, it does not guess
bad = client.post("/api/embed", json={"no_such_field": 1})
print(f"unknown field -> {bad.status_code} {bad.json()['code']}")
