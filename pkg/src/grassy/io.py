"""Dataset JSONL ingestion and CSV helpers.

A dataset line is a JSON object with a unique ``id``, exactly one of
``smiles`` or ``adjacency`` (``{"edges": [[u, v], ...], "labels": [...]}``),
and an optional ``properties`` map of name to number.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DatasetUnreadable, GrassyError
from .graph import DEFAULT_ALPHABET, AtomAlphabet, MolecularGraph, build_graph
from .smiles import parse_smiles


@dataclass
class DatasetRecord:
    id: str
    smiles: str | None = None
    edges: list[tuple[int, int]] | None = None
    labels: list[str | int] | None = None
    properties: dict[str, float] = field(default_factory=dict)

    def to_graph(self, alphabet: AtomAlphabet = DEFAULT_ALPHABET) -> MolecularGraph:
        if self.smiles is not None:
            g = parse_smiles(self.smiles, alphabet, id=self.id)
            return g.with_properties(self.properties)
        return build_graph(self.edges, self.labels, alphabet, self.properties, id=self.id)


@dataclass
class RecordError:
    line: int
    id: str | None
    message: str


def parse_record(obj: dict) -> DatasetRecord:
    if not isinstance(obj, dict):
        raise ValueError("record must be a JSON object")
    rid = obj.get("id")
    if not isinstance(rid, str) or not rid:
        raise ValueError("record needs a non-empty string 'id'")
    has_smiles = "smiles" in obj
    has_adj = "adjacency" in obj
    if has_smiles == has_adj:
        raise ValueError("record needs exactly one of 'smiles' or 'adjacency'")
    props = obj.get("properties", {}) or {}
    if not isinstance(props, dict) or not all(isinstance(v, (int, float)) for v in props.values()):
        raise ValueError("'properties' must map names to numbers")
    props = {str(k): float(v) for k, v in props.items()}
    if has_smiles:
        if not isinstance(obj["smiles"], str):
            raise ValueError("'smiles' must be a string")
        return DatasetRecord(rid, smiles=obj["smiles"], properties=props)
    adj = obj["adjacency"]
    if not isinstance(adj, dict) or "edges" not in adj or "labels" not in adj:
        raise ValueError("'adjacency' needs 'edges' and 'labels'")
    edges = [(int(u), int(v)) for u, v in adj["edges"]]
    return DatasetRecord(rid, edges=edges, labels=list(adj["labels"]), properties=props)


def read_records(path) -> tuple[list[DatasetRecord], list[RecordError]]:
    """Parse every line; malformed lines are collected as errors, not raised."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DatasetUnreadable(f"cannot read dataset {path}: {exc}") from exc
    records, errors = [], []
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = parse_record(json.loads(line))
        except (ValueError, TypeError) as exc:
            errors.append(RecordError(lineno, None, str(exc)))
            continue
        if rec.id in seen:
            errors.append(RecordError(lineno, rec.id, f"duplicate id {rec.id!r}"))
            continue
        seen.add(rec.id)
        records.append(rec)
    return records, errors


def load_graphs(
    path, alphabet: AtomAlphabet = DEFAULT_ALPHABET
) -> tuple[list[MolecularGraph], list[RecordError]]:
    records, errors = read_records(path)
    graphs = []
    for rec in records:
        try:
            graphs.append(rec.to_graph(alphabet))
        except GrassyError as exc:
            errors.append(RecordError(0, rec.id, f"{type(exc).__name__}: {exc}"))
    return graphs, errors


def fixture_path(name: str = "fixture64") -> Path:
    """Path of a bundled fixture dataset (``fixture64`` or ``fixture200``)."""
    return Path(str(resources.files("grassy") / "data" / f"{name}.jsonl"))


def load_fixture(name: str = "fixture64", alphabet: AtomAlphabet = DEFAULT_ALPHABET) -> list[MolecularGraph]:
    graphs, errors = load_graphs(fixture_path(name), alphabet)
    if errors:
        raise DatasetUnreadable(f"bundled fixture {name} has bad records: {errors[:3]}")
    return graphs


# ---------------------------------------------------------------------- CSV


def fmt(x: float) -> str:
    """Shortest text that round-trips a float64 exactly."""
    return repr(float(x))


def write_matrix_csv(path_or_buf, header: Sequence[str], ids: Sequence[str], M: np.ndarray, id_column: str = "id") -> None:
    from .nn import atomic_write

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([id_column, *header])
    for rid, row in zip(ids, np.atleast_2d(M) if len(ids) else []):
        w.writerow([rid, *(fmt(v) for v in row)])
    if isinstance(path_or_buf, (str, Path)):
        atomic_write(path_or_buf, buf.getvalue())
    else:
        path_or_buf.write(buf.getvalue())


def read_matrix_csv(path) -> tuple[list[str], list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0][1:]
    ids = [r[0] for r in rows[1:]]
    M = np.array([[float(v) for v in r[1:]] for r in rows[1:]], dtype=np.float64).reshape(len(ids), len(header))
    return header, ids, M


def write_dict_csv(path, rows: Sequence[dict], columns: Sequence[str]) -> None:
    from .nn import atomic_write

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r[c]) if isinstance(r.get(c), float) else r.get(c, "") for c in columns])
    atomic_write(path, buf.getvalue())
