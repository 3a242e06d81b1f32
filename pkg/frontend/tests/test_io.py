import json

import pytest

from dtnplots.io import (
    SchemaError,
    mode_series,
    per_time,
    read_artifact_csv,
    read_artifact_json,
    require_columns,
)

HEADER = "# dtnlab version=0.1.0 config_hash=abcdef123456 subcommand=test\n"


def test_csv_header_parsed(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text(HEADER + "a,b\n1,2\n")
    meta, rows = read_artifact_csv(p)
    assert meta["config_hash"] == "abcdef123456"
    assert rows == [{"a": "1", "b": "2"}]


def test_missing_header_rejected(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(SchemaError, match="header"):
        read_artifact_csv(p)


def test_version_mismatch_rejected(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text(HEADER.replace("0.1.0", "0.2.0") + "a\n1\n")
    with pytest.raises(SchemaError, match="schema"):
        read_artifact_csv(p)


def test_missing_file(tmp_path):
    with pytest.raises(SchemaError):
        read_artifact_csv(tmp_path / "absent.csv")


def test_json_requires_version(tmp_path):
    p = tmp_path / "x.json"
    p.write_text(json.dumps({"data": 1}))
    with pytest.raises(SchemaError, match="version"):
        read_artifact_json(p)
    p.write_text(json.dumps({"version": "0.1.0", "data": 1}))
    assert read_artifact_json(p)["data"] == 1


def test_require_columns(tmp_path):
    with pytest.raises(SchemaError, match="missing columns"):
        require_columns([{"a": "1"}], {"a", "b"}, "x")
    with pytest.raises(SchemaError, match="no data rows"):
        require_columns([], {"a"}, "x")


def test_series_helpers():
    rows = [
        {"time": "0.0", "mode_index": "1", "coeff_re": "0.5", "coeff_im": "0.0",
         "norm_H1": "2.0"},
        {"time": "0.0", "mode_index": "2", "coeff_re": "0.1", "coeff_im": "0.2",
         "norm_H1": "2.0"},
        {"time": "1.0", "mode_index": "1", "coeff_re": "0.25", "coeff_im": "0.0",
         "norm_H1": "1.0"},
    ]
    times, coeffs = mode_series(rows, 1)
    assert times == [0.0, 1.0]
    assert coeffs == [0.5 + 0j, 0.25 + 0j]
    times, h1 = per_time(rows, "norm_H1")
    assert times == [0.0, 1.0]
    assert h1 == [2.0, 1.0]
