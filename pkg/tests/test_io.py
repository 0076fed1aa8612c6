"""Serialization: exact round trips, deterministic output, manifests."""

import json
import math

import numpy as np
import pytest

from conftest import random_complex
from pcdnse.io import (
    format_float,
    read_field_csv,
    read_field_json,
    sha256_file,
    write_field_csv,
    write_field_json,
    write_json,
    write_manifest,
    write_table_csv,
)
from pcdnse.model_continuum import FieldState
from pcdnse.params import OPEN, PERIODIC


def test_format_float_roundtrips_doubles():
    for value in [0.1, 1.0 / 3.0, math.pi, 1e-300, -2.5e17, 0.0]:
        assert float(format_float(value)) == value


def test_field_csv_roundtrip_is_exact(tmp_path, rng):
    psi = random_complex(rng, 64)
    field = FieldState(psi, 32.0)
    path = write_field_csv(tmp_path / "field.csv", field,
                           meta={"t": "1.5", "note": "checkpoint"})
    back = read_field_csv(path)
    assert np.array_equal(back.psi, field.psi)
    assert back.domain_length == 32.0
    assert back.boundary == PERIODIC


def test_field_csv_roundtrip_open_boundary(tmp_path, rng):
    field = FieldState(random_complex(rng, 33), 32.0, OPEN)
    back = read_field_csv(write_field_csv(tmp_path / "field.csv", field))
    assert back.boundary == OPEN
    assert back.dx == field.dx
    assert np.array_equal(back.psi, field.psi)


def test_field_csv_requires_domain_length(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,re_psi,im_psi\n0,1,0\n1,0,1\n")
    with pytest.raises(ValueError, match="domain_length"):
        read_field_csv(bad)


def test_field_json_roundtrip_is_exact(tmp_path, rng):
    field = FieldState(random_complex(rng, 48), 24.0)
    path = write_field_json(tmp_path / "field.json", field,
                            meta={"preset": "demo"})
    back = read_field_json(path)
    assert np.array_equal(back.psi, field.psi)
    payload = json.loads(path.read_text())
    assert payload["meta"] == {"preset": "demo"}


def test_table_csv_layout_and_validation(tmp_path):
    path = write_table_csv(tmp_path / "t.csv",
                           {"t": np.array([0.0, 0.5]),
                            "n": np.array([4.0, 4.0])})
    lines = path.read_text().splitlines()
    assert lines[0] == "t,n"
    assert lines[1] == "0,4"
    assert len(lines) == 3
    with pytest.raises(ValueError, match="equal length"):
        write_table_csv(tmp_path / "u.csv",
                        {"a": np.zeros(3), "b": np.zeros(2)})


def test_write_json_handles_numpy_and_paths(tmp_path):
    path = write_json(tmp_path / "out.json", {
        "scalar": np.float64(0.5),
        "count": np.int64(3),
        "arr": np.array([1.0, 2.0]),
        "where": tmp_path / "x",
    })
    payload = json.loads(path.read_text())
    assert payload["scalar"] == 0.5
    assert payload["count"] == 3
    assert payload["arr"] == [1.0, 2.0]
    assert payload["where"].endswith("x")
    with pytest.raises(TypeError, match="serializable"):
        write_json(tmp_path / "bad.json", {"f": object()})


def test_write_json_is_deterministic(tmp_path):
    a = write_json(tmp_path / "a.json", {"b": 1, "a": 2})
    b = write_json(tmp_path / "b.json", {"a": 2, "b": 1})
    assert a.read_text() == b.read_text()


def test_sha256_matches_known_digest(tmp_path):
    f = tmp_path / "blob"
    f.write_bytes(b"abc")
    assert sha256_file(f) == (
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad")


def test_manifest_lists_files_with_checksums(tmp_path):
    f1 = tmp_path / "b.txt"
    f2 = tmp_path / "a.txt"
    f1.write_text("one")
    f2.write_text("two")
    path = write_manifest(tmp_path, [f1, f2], extra={"figure": "demo"})
    payload = json.loads(path.read_text())
    assert payload["figure"] == "demo"
    names = [e["path"] for e in payload["files"]]
    assert names == ["a.txt", "b.txt"]      # sorted, relative paths
    for entry in payload["files"]:
        assert entry["sha256"] == sha256_file(tmp_path / entry["path"])
        assert entry["bytes"] == len((tmp_path / entry["path"]).read_bytes())
