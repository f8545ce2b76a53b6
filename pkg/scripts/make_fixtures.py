"""Regenerate the bundled fixture datasets.

Molecules are concatenations of SMILES fragments whose heavy-atom and ring
counts are known, so the ``heavy_atoms`` / ``ring_count`` / ``hetero_atoms``
properties come from the construction rather than from the parser.

    python scripts/make_fixtures.py
"""

import json
from pathlib import Path

import numpy as np

# (smiles, heavy atoms, rings, hetero atoms)
CHAIN = [
    ("C", 1, 0, 0),
    ("C", 1, 0, 0),
    ("CC", 2, 0, 0),
    ("N", 1, 0, 1),
    ("O", 1, 0, 1),
    ("S", 1, 0, 1),
    ("C(=O)", 2, 0, 1),
    ("C(C)", 2, 0, 0),
    ("C(F)", 2, 0, 1),
    ("C(Cl)", 2, 0, 1),
    ("C(=O)N", 3, 0, 2),
    ("C(O)", 2, 0, 1),
    ("C(C)(C)", 3, 0, 0),
    ("C=C", 2, 0, 0),
    ("C#N", 2, 0, 1),
]
RINGS = [
    ("c1ccccc1", 6, 1, 0),
    ("c1ccncc1", 6, 1, 1),
    ("C1CCCCC1", 6, 1, 0),
    ("C1CCNCC1", 6, 1, 1),
    ("C1CCCC1", 5, 1, 0),
    ("c1ccsc1", 5, 1, 1),
    ("c1ccoc1", 5, 1, 1),
    ("C1CC1", 3, 1, 0),
    ("c1ccc2ccccc2c1", 10, 2, 0),
    ("C1CCOC1", 5, 1, 1),
]


def molecule(rng, lo, hi):
    while True:
        parts, atoms, rings, hetero = [], 0, 0, 0
        target = int(rng.integers(lo, hi + 1))
        while atoms < target:
            pool = RINGS if rng.random() < 0.35 else CHAIN
            s, a, r, h = pool[rng.integers(len(pool))]
            parts.append(s)
            atoms, rings, hetero = atoms + a, rings + r, hetero + h
        if lo <= atoms <= hi:
            return "".join(parts), atoms, rings, hetero


def write(path, n, lo, hi, seed, prefix):
    rng = np.random.default_rng(seed)
    seen = set()
    rows = []
    while len(rows) < n:
        smiles, atoms, rings, hetero = molecule(rng, lo, hi)
        if smiles in seen:
            continue
        seen.add(smiles)
        rows.append(
            {
                "id": f"{prefix}{len(rows):03d}",
                "smiles": smiles,
                "properties": {
                    "ring_count": float(rings),
                    "heavy_atoms": float(atoms),
                    "hetero_atoms": float(hetero),
                },
            }
        )
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for r in rows:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


if __name__ == "__main__":
    root = Path(__file__).resolve().parent.parent / "src" / "grassy" / "data"
    write(root / "fixture64.jsonl", 64, 8, 18, seed=7, prefix="mol")
    write(root / "fixture200.jsonl", 200, 8, 24, seed=11, prefix="zmol")
