"""CSV ingestion, schema config, complaint filtering, and split plans."""

import numpy as np
import pytest

from phenomap.errors import ConfigError, ParameterError, ParseError, SchemaError
from phenomap.tabular import (
    SchemaConfig,
    Table,
    filter_by_complaint,
    load_csv,
    make_split,
)


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_kinds_inferred_from_cells(self, tmp_path):
        path = write(tmp_path, "age,dispo\n41,home\n66,admit\n")
        table = load_csv(path, SchemaConfig())
        assert table.schema == (("age", "numeric"), ("dispo", "categorical"))
        np.testing.assert_array_equal(table.column("age"), [41.0, 66.0])
        assert list(table.column("dispo")) == ["home", "admit"]

    def test_declared_kind_overrides_inference(self, tmp_path):
        path = write(tmp_path, "code\n1\n2\n")
        table = load_csv(path, SchemaConfig(kinds={"code": "categorical"}))
        assert table.kind_of("code") == "categorical"
        assert list(table.column("code")) == ["1", "2"]

    def test_missing_tokens_become_nan_or_none(self, tmp_path):
        path = write(tmp_path, "v,c\n1,x\nNA,\n,y\n")
        table = load_csv(path, SchemaConfig())
        v = table.column("v")
        assert v[0] == 1.0 and np.isnan(v[1]) and np.isnan(v[2])
        assert list(table.column("c")) == ["x", None, "y"]

    def test_custom_missing_tokens(self, tmp_path):
        path = write(tmp_path, "v\n1\n?\n")
        table = load_csv(path, SchemaConfig(missing_tokens=("?",)))
        assert np.isnan(table.column("v")[1])

    def test_quoted_cells_with_commas(self, tmp_path):
        path = write(tmp_path, 'c\n"abd pain, nausea"\nfever\n')
        table = load_csv(path, SchemaConfig())
        assert table.column("c")[0] == "abd pain, nausea"

    def test_bad_numeric_cell_names_one_based_row(self, tmp_path):
        path = write(tmp_path, "v\n1\noops\n")
        with pytest.raises(ParseError, match="row 2.*'oops'.*'v'"):
            load_csv(path, SchemaConfig(kinds={"v": "numeric"}))

    def test_flag_cell_must_be_zero_or_one(self, tmp_path):
        path = write(tmp_path, "f\n1\n2\n")
        with pytest.raises(ParseError, match="row 2.*'f'"):
            load_csv(path, SchemaConfig(kinds={"f": "binary-flag"}))

    def test_missing_flag_means_not_flagged(self, tmp_path):
        path = write(tmp_path, "f,v\n1,7\n,8\nNA,9\n")
        table = load_csv(path, SchemaConfig(kinds={"f": "binary-flag"}))
        np.testing.assert_array_equal(table.column("f"), [1.0, 0.0, 0.0])

    def test_ragged_row_rejected(self, tmp_path):
        path = write(tmp_path, "a,b\n1,2\n3\n")
        with pytest.raises(ParseError, match="row 2 has 1 cells, expected 2"):
            load_csv(path, SchemaConfig())

    def test_duplicate_header_rejected(self, tmp_path):
        path = write(tmp_path, "a,a\n1,2\n")
        with pytest.raises(ParseError, match="duplicate column names"):
            load_csv(path, SchemaConfig())

    def test_empty_file_rejected(self, tmp_path):
        path = write(tmp_path, "")
        with pytest.raises(ParseError, match="empty file"):
            load_csv(path, SchemaConfig())

    def test_header_only_is_an_empty_table(self, tmp_path):
        path = write(tmp_path, "a,b\n")
        table = load_csv(path, SchemaConfig())
        assert table.row_count == 0

    def test_non_finite_numeric_rejected(self, tmp_path):
        path = write(tmp_path, "v\ninf\n")
        with pytest.raises(ParseError, match="non-finite"):
            load_csv(path, SchemaConfig(kinds={"v": "numeric"}))

    def test_inference_treats_inf_token_as_categorical(self, tmp_path):
        path = write(tmp_path, "v\ninf\nx\n")
        table = load_csv(path, SchemaConfig())
        assert table.kind_of("v") == "categorical"


class TestSchemaConfig:
    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError, match="unknown column kind"):
            SchemaConfig(kinds={"v": "integer"})

    def test_unknown_config_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown schema config keys"):
            SchemaConfig.from_dict({"colums": {}})

    def test_declared_column_must_exist(self, tmp_path):
        path = write(tmp_path, "a\n1\n")
        with pytest.raises(ConfigError, match="'b'"):
            load_csv(path, SchemaConfig(kinds={"b": "numeric"}))

    def test_excluded_column_must_exist(self, tmp_path):
        path = write(tmp_path, "a\n1\n")
        with pytest.raises(ConfigError, match="'gone'"):
            load_csv(path, SchemaConfig(excluded=("gone",)))

    def test_complaint_flag_forced_binary(self, tmp_path):
        path = write(tmp_path, "cc\n1\n0\n")
        table = load_csv(path, SchemaConfig(complaint_flags=("cc",)))
        assert table.kind_of("cc") == "binary-flag"

    def test_complaint_flag_declared_numeric_is_a_config_error(self, tmp_path):
        path = write(tmp_path, "cc\n1\n")
        cfg = SchemaConfig(kinds={"cc": "numeric"}, complaint_flags=("cc",))
        with pytest.raises(ConfigError, match="must be binary-flag"):
            load_csv(path, cfg)

    def test_from_json_round_trip(self, tmp_path):
        cfg_path = tmp_path / "schema.json"
        cfg_path.write_text(
            '{"columns": {"v": "numeric"}, "excluded": ["y"],'
            ' "complaint_flags": ["cc"]}',
            encoding="utf-8",
        )
        cfg = SchemaConfig.from_json(cfg_path)
        assert cfg.kinds == {"v": "numeric"}
        assert cfg.excluded == ("y",)
        assert cfg.complaint_flags == ("cc",)

    def test_from_json_invalid_json(self, tmp_path):
        cfg_path = tmp_path / "schema.json"
        cfg_path.write_text("{nope", encoding="utf-8")
        with pytest.raises(ConfigError, match="invalid JSON"):
            SchemaConfig.from_json(cfg_path)


class TestTable:
    def test_feature_schema_omits_excluded(self):
        table = Table(
            schema=(("a", "numeric"), ("y", "numeric")),
            columns={"a": np.zeros(2), "y": np.zeros(2)},
            row_count=2,
            excluded=("y",),
        )
        assert table.feature_schema == (("a", "numeric"),)

    def test_column_length_checked(self):
        with pytest.raises(SchemaError, match="cells"):
            Table(schema=(("a", "numeric"),), columns={"a": np.zeros(3)},
                  row_count=2)

    def test_unknown_column_lookup(self):
        table = Table(schema=(("a", "numeric"),), columns={"a": np.zeros(1)},
                      row_count=1)
        with pytest.raises(SchemaError, match="'b'"):
            table.column("b")
        with pytest.raises(SchemaError, match="'b'"):
            table.kind_of("b")

    def test_subset_preserves_schema_and_flags(self):
        table = Table(
            schema=(("a", "numeric"), ("cc", "binary-flag")),
            columns={"a": np.arange(4.0), "cc": np.array([0.0, 1, 1, 0])},
            row_count=4,
            complaint_flags=("cc",),
        )
        sub = table.subset([2, 0])
        assert sub.row_count == 2
        np.testing.assert_array_equal(sub.column("a"), [2.0, 0.0])
        assert sub.complaint_flags == ("cc",)


class TestComplaintFilter:
    def make(self):
        return Table(
            schema=(("v", "numeric"), ("cc", "binary-flag")),
            columns={"v": np.arange(5.0), "cc": np.array([1.0, 0, 1, 0, 1])},
            row_count=5,
            complaint_flags=("cc",),
        )

    def test_keeps_flagged_rows_only(self):
        sub = filter_by_complaint(self.make(), "cc")
        np.testing.assert_array_equal(sub.column("v"), [0.0, 2.0, 4.0])

    def test_wrong_kind_rejected(self):
        table = self.make()
        with pytest.raises(SchemaError, match="not a binary flag"):
            filter_by_complaint(table, "v")

    def test_unknown_column_rejected(self):
        with pytest.raises(SchemaError, match="'nope'"):
            filter_by_complaint(self.make(), "nope")

    def test_empty_result_warns_but_returns(self, caplog):
        table = Table(
            schema=(("cc", "binary-flag"),),
            columns={"cc": np.zeros(3)},
            row_count=3,
            complaint_flags=("cc",),
        )
        with caplog.at_level("WARNING"):
            sub = filter_by_complaint(table, "cc")
        assert sub.row_count == 0
        assert any("no rows flagged" in r.message for r in caplog.records)


class TestSplitPlan:
    def table(self, n):
        return Table(schema=(("v", "numeric"),),
                     columns={"v": np.arange(float(n))}, row_count=n)

    def test_sizes_100_rows(self):
        split = make_split(self.table(100), seed=7)
        assert len(split.test_indices) == 20
        sizes = [len(split.fold_indices(f)) for f in range(5)]
        assert sizes == [16, 16, 16, 16, 16]
        assert len(split.training_indices_excluding(0)) == 64

    def test_partition_is_exact(self):
        split = make_split(self.table(103), seed=3)
        parts = [set(split.test_indices)]
        parts += [set(split.fold_indices(f)) for f in range(5)]
        union = set().union(*parts)
        assert union == set(range(103))
        assert sum(len(p) for p in parts) == 103  # pairwise disjoint

    def test_fold_sizes_within_one(self):
        split = make_split(self.table(97), seed=0)
        sizes = [len(split.fold_indices(f)) for f in range(5)]
        assert max(sizes) - min(sizes) <= 1

    def test_deterministic_and_seed_sensitive(self):
        a = make_split(self.table(60), seed=5)
        b = make_split(self.table(60), seed=5)
        c = make_split(self.table(60), seed=6)
        np.testing.assert_array_equal(a.assignment, b.assignment)
        assert not np.array_equal(a.assignment, c.assignment)

    def test_training_excluding_drops_exactly_one_fold(self):
        split = make_split(self.table(50), seed=1)
        train = set(split.training_indices_excluding(2))
        assert train.isdisjoint(split.fold_indices(2))
        assert train.isdisjoint(split.test_indices)
        expected = set(split.train_indices) - set(split.fold_indices(2))
        assert train == expected

    def test_fold_bounds_checked(self):
        split = make_split(self.table(50), seed=1)
        with pytest.raises(ParameterError):
            split.fold_indices(5)
        with pytest.raises(ParameterError):
            split.training_indices_excluding(-1)

    def test_too_few_rows_rejected(self):
        with pytest.raises(ParameterError, match="too few"):
            make_split(self.table(9), seed=0)
