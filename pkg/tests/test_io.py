import io
import json

import numpy as np
import pytest

from grassy.errors import DatasetUnreadable
from grassy.io import fixture_path, load_fixture, load_graphs, read_matrix_csv, read_records, write_matrix_csv


def write_lines(path, objs):
    path.write_text("".join((o if isinstance(o, str) else json.dumps(o)) + "\n" for o in objs))


def test_fixtures_load():
    gs = load_fixture("fixture64")
    assert len(gs) == 64 and len({g.id for g in gs}) == 64
    assert min(g.n for g in gs) == 8 and max(g.n for g in gs) <= 18
    assert all(g.properties["heavy_atoms"] == g.n for g in gs)
    big = load_fixture("fixture200")
    assert len(big) == 200 and max(g.n for g in big) <= 24


def test_records_and_errors(tmp_path):
    p = tmp_path / "d.jsonl"
    write_lines(
        p,
        [
            {"id": "a", "smiles": "CCO", "properties": {"x": 1}},
            {"id": "b", "adjacency": {"edges": [[0, 1]], "labels": ["C", "N"]}},
            "not json",
            {"id": "a", "smiles": "C"},
            {"id": "c", "smiles": "C", "adjacency": {"edges": [], "labels": ["C"]}},
            {"id": "d", "smiles": "C1CC"},
            {"smiles": "C"},
        ],
    )
    records, errors = read_records(p)
    assert [r.id for r in records] == ["a", "b", "d"]
    assert [e.line for e in errors] == [3, 4, 5, 7]
    graphs, errors = load_graphs(p)
    assert [g.id for g in graphs] == ["a", "b"]
    assert graphs[0].properties == {"x": 1.0}
    assert any(e.id == "d" and "DanglingRingBond" in e.message for e in errors)


def test_unreadable(tmp_path):
    with pytest.raises(DatasetUnreadable):
        read_records(tmp_path / "missing.jsonl")
    (tmp_path / "bin.jsonl").write_bytes(b"\xff\xfe\x00")
    with pytest.raises(DatasetUnreadable):
        read_records(tmp_path / "bin.jsonl")


def test_matrix_csv_roundtrip(tmp_path, rng):
    M = rng.normal(size=(4, 3)) * 10.0 ** rng.integers(-300, 300, size=(4, 3))
    write_matrix_csv(tmp_path / "m.csv", ["a", "b", "c"], ["r0", "r1", "r2", "r3"], M)
    header, ids, back = read_matrix_csv(tmp_path / "m.csv")
    assert header == ["a", "b", "c"] and ids == ["r0", "r1", "r2", "r3"]
    assert back.tobytes() == M.tobytes()
    buf = io.StringIO()
    write_matrix_csv(buf, ["a"], [], np.zeros((0, 1)))
    assert buf.getvalue() == "id,a\n"


def test_fixture_path_exists():
    assert fixture_path("fixture200").exists()
