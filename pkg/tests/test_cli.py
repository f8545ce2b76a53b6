import json

import pytest

from grassy.cli import main, parse_config
from grassy.errors import ConfigInvalid
from grassy.io import fixture_path

FAST = {
    "seed": 3,
    "dataset": "fixture:fixture64",
    "properties": ["ring_count", "heavy_atoms"],
    "latent": {"latent_dim": 8, "hidden": [32], "max_epochs": 15, "patience": 15},
    "generator": {"steps": 5, "generator_hidden": [16]},
    "sampling": {"count": 10},
}


def write_config(tmp_path, doc=FAST, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


@pytest.mark.parametrize(
    "doc, field",
    [
        ({"latent": {"lr": "fast"}}, "latent.lr"),
        ({"latent": {"input_dim": 3}}, "latent.input_dim"),
        ({"latent": {"latent_dim": 1000}}, "latent"),
        ({"scattering": {"J": 0}}, "scattering"),
        ({"scattering": {"mode": "spline"}}, "scattering"),
        ({"generator": {"K": 0}}, "generator"),
        ({"generator": {"wm": 1.0}}, "generator.wm"),
        ({"validity": {"threshold": 1.5}}, "validity"),
        ({"seed": -1}, "seed"),
        ({"properties": "ring_count"}, "properties"),
        ({"bogus": 1}, "bogus"),
        ({"smoothness": {"k": True}}, "smoothness.k"),
    ],
)
def test_config_field_errors(doc, field):
    with pytest.raises(ConfigInvalid) as exc:
        parse_config(doc)
    assert str(exc.value).startswith(field)


def test_invalid_config_exits_before_data(tmp_path, capsys):
    cfg = write_config(tmp_path, {"latent": {"lr": "x"}, "dataset": str(tmp_path / "nope.jsonl")})
    assert main(["featurize", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "latent.lr" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_missing_prerequisite(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["train-ae", "--config", cfg, "--out", str(tmp_path / "o")]) == 3
    assert "grassy featurize" in capsys.readouterr().err
    assert main(["featurize", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    assert main(["train-gan", "--config", cfg, "--out", str(tmp_path / "o")]) == 3
    assert "grassy train-ae" in capsys.readouterr().err


def test_bad_records_sidecar(tmp_path):
    lines = fixture_path("fixture64").read_text().splitlines()
    good = tmp_path / "one_bad.jsonl"
    good.write_text("\n".join(lines + ['{"id": "broken", "smiles": "C1CC"}']) + "\n")
    out = tmp_path / "o"
    # 1 of 65 records is above the 1% budget
    assert main(["featurize", "--data", str(good), "--out", str(out)]) == 4
    errs = json.loads((out / "features.errors.json").read_text())
    assert [e["id"] for e in errs] == ["broken"]
    many = tmp_path / "many.jsonl"
    body = lines + [json.dumps({"id": f"x{i}", "smiles": f"C{'C' * (i % 7)}O"}) for i in range(100)]
    many.write_text("\n".join(body + ['{"id": "broken", "smiles": "C1CC"}']) + "\n")
    assert main(["featurize", "--data", str(many), "--out", str(tmp_path / "o2")]) == 0
    header = (tmp_path / "o2" / "features.csv").read_text().splitlines()
    assert len(header) == 1 + 164


def test_full_pipeline(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = str(tmp_path / "run")
    for argv in (
        ["featurize"],
        ["train-ae"],
        ["train-ae", "--no-regr"],
        ["train-gan"],
        ["generate"],
        ["generate", "--mode", "interp", "--count", "3"],
        ["validate", "--all-circuits"],
        ["metrics"],
    ):
        assert main([*argv, "--config", cfg, "--out", out]) == 0, argv
    text = capsys.readouterr().out
    assert "validity summary" in text and "mean baseline" in text
    rows = (tmp_path / "run" / "features.csv").read_text().splitlines()
    assert len(rows) == 65 and len(rows[0].split(",")) == 421
    hist = (tmp_path / "run" / "ae_regr" / "history.csv").read_text().splitlines()
    assert hist[0].split(",")[:3] == ["epoch", "train_loss", "val_loss"]
    samples = [json.loads(l) for l in (tmp_path / "run" / "ae_regr" / "samples.jsonl").read_text().splitlines()]
    assert len(samples) == 3 and all("alpha" in s and "verdict" in s for s in samples)
    report = json.loads((tmp_path / "run" / "report.json").read_text())
    assert set(report["property_error"]) == {"AE+REGR", "AE (probe)", "mean baseline"}
    assert report["smoothness"] and report["validity"]
    latent = (tmp_path / "run" / "ae" / "latent.csv").read_text().splitlines()
    assert len(latent) == 65 and latent[0].split(",") == ["id", *(f"z{i}" for i in range(8)), "ring_count", "heavy_atoms"]


def test_learned_mode_pipeline(tmp_path):
    doc = dict(FAST, scattering={"J": 2, "Q": 1, "T": 4}, latent={"latent_dim": 4, "hidden": [16], "max_epochs": 2, "patience": 2})
    cfg = write_config(tmp_path, doc)
    out = str(tmp_path / "run")
    for argv in (["featurize"], ["train-ae"], ["train-gan"], ["generate"]):
        assert main([*argv, "--config", cfg, "--out", out, "--scattering-mode", "learned", "--variational"]) == 0
    assert (tmp_path / "run" / "vae_regr" / "samples.jsonl").exists()
