"""Command-line pipeline: featurize, train-ae, train-gan, generate, validate, metrics.

Every stage reads and writes under one ``--out`` directory::

    features.csv  features.errors.json  features.meta.json  bank.bin/.json
    <variant>/latent.bin/.json  history.csv  split.json
    <variant>/generator.bin/.json  gan_history.csv  samples.jsonl  latent.csv
    report.json  tables.txt

``<variant>`` is ``ae``, ``ae_regr``, ``vae`` or ``vae_regr`` depending on the
``--variational`` / ``--no-regr`` flags.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import gan as gan_mod
from . import latent as lat
from . import metrics as met
from . import validity as val
from .errors import ConfigInvalid, DatasetUnreadable, GrassyError, MissingPrerequisite
from .graph import DEFAULT_ALPHABET, AtomAlphabet, MolecularGraph
from .io import fixture_path, load_graphs, read_matrix_csv, write_dict_csv, write_matrix_csv
from .nn import atomic_write, load_params, save_params
from .scattering import (
    LearnedScales,
    ScatteringConfig,
    dyadic_selector,
    feature_dimension,
    feature_names,
    featurize_dataset,
)

MAX_FAILURE_RATE = 0.01

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_PREREQ, EXIT_DATA = 0, 1, 2, 3, 4

VARIANTS = {"ae": "AE", "ae_regr": "AE+REGR", "vae": "VAE", "vae_regr": "VAE+REGR"}


# ------------------------------------------------------------------ config


@dataclass
class SamplingConfig:
    count: int = 100
    mode: str = "perturb"

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be >= 0")
        if self.mode not in ("perturb", "interp"):
            raise ValueError(f"mode must be 'perturb' or 'interp', got {self.mode!r}")


# LatentModelConfig fields that come from the data or the CLI flags
_LATENT_DERIVED = {"input_dim", "property_names", "variational"}


@dataclass
class RunConfig:
    seed: int = 0
    dataset: str | None = None
    properties: tuple[str, ...] = ()
    alphabet: tuple[str, ...] = DEFAULT_ALPHABET.symbols
    scattering: ScatteringConfig = field(default_factory=ScatteringConfig)
    latent: dict[str, Any] = field(default_factory=dict)
    generator: dict[str, Any] = field(default_factory=dict)
    validity: val.ValidityConfig = field(default_factory=val.ValidityConfig)
    smoothness: met.SmoothnessConfig = field(default_factory=met.SmoothnessConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)

    @property
    def alphabet_obj(self) -> AtomAlphabet:
        return AtomAlphabet(self.alphabet)

    @property
    def input_dim(self) -> int:
        return feature_dimension(self.scattering, len(self.alphabet))

    def latent_config(self, variational: bool, regr: bool) -> lat.LatentModelConfig:
        kw = dict(self.latent)
        return lat.LatentModelConfig(
            input_dim=self.input_dim,
            variational=variational,
            property_names=self.properties if regr else (),
            **kw,
        )

    def generator_config(self, n_max: int, latent_dim: int) -> gan_mod.GeneratorConfig:
        kw = dict(self.generator)
        if kw.get("n_max") is None:
            kw["n_max"] = n_max
        elif kw["n_max"] < n_max:
            raise ConfigInvalid(f"generator.n_max: {kw['n_max']} is smaller than the largest graph ({n_max} nodes)")
        kw["latent_dim"] = latent_dim
        return gan_mod.GeneratorConfig(**kw)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "dataset": self.dataset,
            "properties": list(self.properties),
            "alphabet": list(self.alphabet),
            "scattering": dataclasses.asdict(self.scattering),
            "latent": dict(self.latent),
            "generator": dict(self.generator),
            "validity": dataclasses.asdict(self.validity),
            "smoothness": dataclasses.asdict(self.smoothness),
            "sampling": dataclasses.asdict(self.sampling),
        }


def _kind(default) -> tuple[type, ...] | None:
    if isinstance(default, bool):
        return (bool,)
    if isinstance(default, int):
        return (int,)
    if isinstance(default, float):
        return (int, float)
    if isinstance(default, str):
        return (str,)
    if isinstance(default, tuple):
        return (list, tuple)
    return None


_KIND_NAMES = {(bool,): "a boolean", (int,): "an integer", (int, float): "a number", (str,): "a string", (list, tuple): "a list"}


def _check_section(section: str, raw, cls, skip: set[str] = frozenset(), allow: set[str] = frozenset()) -> dict:
    if not isinstance(raw, dict):
        raise ConfigInvalid(f"{section}: expected an object, got {type(raw).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    out = {}
    for key, value in raw.items():
        where = f"{section}.{key}"
        if key in skip:
            raise ConfigInvalid(f"{where}: set automatically, remove it from the config")
        if key not in fields and key not in allow:
            raise ConfigInvalid(f"{where}: unknown field (known: {', '.join(sorted(set(fields) - skip))})")
        if key in allow and value is None:
            out[key] = value
            continue
        f = fields[key]
        default = f.default if f.default is not dataclasses.MISSING else None
        kind = _kind(default)
        if key == "n_max":
            kind = (int,)
        if kind is not None:
            if not isinstance(value, kind) or (kind != (bool,) and isinstance(value, bool)):
                raise ConfigInvalid(f"{where}: expected {_KIND_NAMES[kind]}, got {value!r}")
        if isinstance(value, list):
            value = tuple(value)
        out[key] = value
    return out


def _build(section: str, cls, kw: dict, **extra):
    try:
        return cls(**kw, **extra)
    except (ValueError, TypeError) as exc:
        raise ConfigInvalid(f"{section}: {exc}") from exc


def parse_config(doc: dict) -> RunConfig:
    """Validate a config document field by field; raises :class:`ConfigInvalid`."""
    if not isinstance(doc, dict):
        raise ConfigInvalid("config: top level must be a JSON object")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    for key in doc:
        if key not in known:
            raise ConfigInvalid(f"{key}: unknown field (known: {', '.join(sorted(known))})")
    cfg = RunConfig()
    if "seed" in doc:
        seed = doc["seed"]
        if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
            raise ConfigInvalid(f"seed: expected an integer in [0, 2^64), got {seed!r}")
        cfg.seed = seed
    if "dataset" in doc:
        if doc["dataset"] is not None and not isinstance(doc["dataset"], str):
            raise ConfigInvalid(f"dataset: expected a path string, got {doc['dataset']!r}")
        cfg.dataset = doc["dataset"]
    for key in ("properties", "alphabet"):
        if key in doc:
            v = doc[key]
            if not isinstance(v, list) or not all(isinstance(s, str) for s in v):
                raise ConfigInvalid(f"{key}: expected a list of strings, got {v!r}")
            setattr(cfg, key, tuple(v))
    try:
        cfg.alphabet_obj
    except ValueError as exc:
        raise ConfigInvalid(f"alphabet: {exc}") from exc
    if "scattering" in doc:
        cfg.scattering = _build("scattering", ScatteringConfig, _check_section("scattering", doc["scattering"], ScatteringConfig))
    if "validity" in doc:
        cfg.validity = _build("validity", val.ValidityConfig, _check_section("validity", doc["validity"], val.ValidityConfig))
    if "smoothness" in doc:
        cfg.smoothness = _build("smoothness", met.SmoothnessConfig, _check_section("smoothness", doc["smoothness"], met.SmoothnessConfig))
    if "sampling" in doc:
        cfg.sampling = _build("sampling", SamplingConfig, _check_section("sampling", doc["sampling"], SamplingConfig))
    if "latent" in doc:
        cfg.latent = _check_section("latent", doc["latent"], lat.LatentModelConfig, skip=_LATENT_DERIVED)
    if "generator" in doc:
        cfg.generator = _check_section("generator", doc["generator"], gan_mod.GeneratorConfig, skip={"latent_dim"}, allow={"n_max"})

    # dry-build the model configs so that bad values fail before any data is read
    for variational in (False, True):
        _build("latent", lat.LatentModelConfig, dict(cfg.latent), input_dim=cfg.input_dim, variational=variational, property_names=cfg.properties)
    gkw = dict(cfg.generator)
    gkw.setdefault("n_max", None)
    gkw["n_max"] = gkw["n_max"] if gkw["n_max"] is not None else 2
    _build("generator", gan_mod.GeneratorConfig, gkw, latent_dim=cfg.latent.get("latent_dim", 32))
    return cfg


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigInvalid(f"config: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config: {path} is not valid JSON ({exc})") from exc
    return parse_config(doc)


# ------------------------------------------------------------------ helpers


def resolve_dataset(spec: str | None) -> Path:
    if spec is None:
        raise ConfigInvalid("dataset: no dataset given (use --data or the 'dataset' config field)")
    if spec.startswith("fixture:"):
        return fixture_path(spec.split(":", 1)[1])
    return Path(spec)


def variant_slug(variational: bool, regr: bool) -> str:
    return ("vae" if variational else "ae") + ("_regr" if regr else "")


def _require(path: Path, hint: str) -> Path:
    if not path.exists():
        raise MissingPrerequisite(f"{path} not found; {hint}")
    return path


@dataclass
class Context:
    cfg: RunConfig
    out: Path
    data: Path | None = None
    variational: bool = False
    regr: bool = True

    @property
    def slug(self) -> str:
        return variant_slug(self.variational, self.regr and bool(self.cfg.properties))

    @property
    def model_dir(self) -> Path:
        return self.out / self.slug

    def dataset_path(self) -> Path:
        return self.data if self.data is not None else resolve_dataset(self.cfg.dataset)


def _load_dataset(ctx: Context) -> tuple[list[MolecularGraph], list]:
    path = ctx.dataset_path()
    if not path.exists():
        raise DatasetUnreadable(f"dataset {path} does not exist")
    return load_graphs(path, ctx.cfg.alphabet_obj)


def _features(ctx: Context) -> tuple[list[str], np.ndarray, list[MolecularGraph]]:
    """Featurized ids and matrix plus the graphs in the same order."""
    fpath = _require(ctx.out / "features.csv", f"run `grassy featurize --out {ctx.out}` first")
    _, ids, X = read_matrix_csv(fpath)
    graphs, _ = _load_dataset(ctx)
    by_id = {g.id: g for g in graphs}
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise MissingPrerequisite(f"features.csv lists ids absent from the dataset ({missing[:3]}); re-run featurize")
    return ids, X, [by_id[i] for i in ids]


def _model_features(ctx: Context, m: lat.LatentModel, X: np.ndarray, graphs) -> np.ndarray:
    """Moments under the model's trained scales (learned mode) or the stored matrix."""
    if m.scales is None:
        return X
    return featurize_dataset(graphs, ctx.cfg.scattering, ctx.cfg.alphabet_obj, m.scales)


def _load_latent(ctx: Context) -> lat.LatentModel:
    ckpt = ctx.model_dir / "latent"
    _require(ckpt.with_suffix(".json"), f"run `grassy train-ae --out {ctx.out}{_flag_text(ctx)}` first")
    return lat.load_checkpoint(ckpt)


def _flag_text(ctx: Context) -> str:
    return (" --variational" if ctx.variational else "") + ("" if ctx.regr else " --no-regr")


def _property_targets(cfg: RunConfig, graphs) -> np.ndarray | None:
    if not cfg.properties:
        return None
    return lat.property_matrix(graphs, cfg.properties)


def _history_csv(path: Path, rows: list[dict]) -> None:
    cols: list[str] = []
    for r in rows:
        cols += [c for c in r if c not in cols]
    write_dict_csv(path, rows, cols)


def _json(path: Path, doc) -> None:
    atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _say(msg: str) -> None:
    print(msg, flush=True)


# ----------------------------------------------------------------- commands


def cmd_featurize(ctx: Context) -> int:
    cfg = ctx.cfg
    graphs, errors = _load_dataset(ctx)
    total = len(graphs) + len(errors)
    ctx.out.mkdir(parents=True, exist_ok=True)
    _json(ctx.out / "features.errors.json", [dataclasses.asdict(e) for e in errors])
    for e in errors:
        _say(f"record error (line {e.line}, id {e.id}): {e.message}")
    if total and len(errors) / total > MAX_FAILURE_RATE:
        _say(f"{len(errors)}/{total} records failed (> {MAX_FAILURE_RATE:.0%}); see features.errors.json")
        return EXIT_DATA

    scales = LearnedScales(cfg.scattering.J, cfg.scattering.T) if cfg.scattering.mode == "learned" else None
    X = featurize_dataset(graphs, cfg.scattering, cfg.alphabet_obj, scales)
    ids = [g.id for g in graphs]
    write_matrix_csv(ctx.out / "features.csv", feature_names(cfg.scattering, cfg.alphabet_obj), ids, X)

    if scales is not None:
        F = scales.selector()
        save_params(ctx.out / "bank.bin", {"selector_logits": scales.logits.value, "selector": F})
    else:
        F = dyadic_selector(cfg.scattering.J)
        save_params(ctx.out / "bank.bin", {"selector": F})
    _json(ctx.out / "bank.json", {"scattering": dataclasses.asdict(cfg.scattering), "selector_shape": list(F.shape)})

    mean = X.mean(axis=0) if len(X) else np.zeros(X.shape[1])
    sd = X.std(axis=0) if len(X) else np.ones(X.shape[1])
    _json(
        ctx.out / "features.meta.json",
        {
            "config": cfg.to_dict(),
            "dataset": str(ctx.dataset_path()),
            "rows": len(ids),
            "width": int(X.shape[1]),
            "failed_records": len(errors),
            "mean": [float(v) for v in mean],
            "std": [float(v) for v in sd],
        },
    )
    _say(f"featurized {len(ids)} graphs into {X.shape[1]} moments ({len(errors)} record errors)")
    return EXIT_OK


def cmd_train_ae(ctx: Context) -> int:
    cfg = ctx.cfg
    ids, X, graphs = _features(ctx)
    regr = ctx.regr and bool(cfg.properties)
    lc = cfg.latent_config(ctx.variational, regr)
    m = lat.LatentModel(lc, seed=cfg.seed)
    props = _property_targets(cfg, graphs)
    data = lat.TrainingData(X, props, graphs, ids)
    scales = None
    if cfg.scattering.mode == "learned":
        blob = load_params(_require(ctx.out / "bank.bin", "re-run featurize"))
        scales = LearnedScales(cfg.scattering.J, cfg.scattering.T, logits=blob["selector_logits"])
    hist = lat.train(m, data, seed=cfg.seed, scattering=cfg.scattering, scales=scales)
    d = ctx.model_dir
    d.mkdir(parents=True, exist_ok=True)
    lat.save_checkpoint(m, d / "latent")
    _history_csv(d / "history.csv", hist.rows)
    _json(d / "split.json", {k: [ids[i] for i in v] for k, v in hist.split.items()})
    _say(f"{VARIANTS[ctx.slug]}: {len(hist.rows)} epochs, best val loss {m.val_loss:.6g} at epoch {hist.best_epoch}")
    return EXIT_OK


def cmd_train_gan(ctx: Context) -> int:
    cfg = ctx.cfg
    m = _load_latent(ctx)
    ids, X, graphs = _features(ctx)
    X = _model_features(ctx, m, X, graphs)
    gc = cfg.generator_config(max(g.n for g in graphs), m.config.latent_dim)
    gm, hist = gan_mod.train_gan(gc, m, graphs, X, seed=cfg.seed)
    d = ctx.model_dir
    gan_mod.save_generator(gm, d / "generator")
    _history_csv(d / "gan_history.csv", hist.rows)
    last = hist.rows[-1] if hist.rows else {}
    _say(f"generator trained for {len(hist.rows)} steps; final L_m {last.get('loss_adjacency', float('nan')):.4g}")
    return EXIT_OK


def _sample_record(s: dict, cfg: val.ValidityConfig) -> dict:
    W = s["soft_adjacency"]
    adj = (W > cfg.threshold) & ~np.eye(W.shape[0], dtype=bool)
    u, v = np.nonzero(np.triu(adj))
    _, verdict = val.judge(W, cfg)
    rec = {k: v for k, v in s.items() if k != "soft_adjacency"}
    rec["n"] = int(W.shape[0])
    rec["soft_adjacency"] = [float(x) for x in W.ravel()]
    rec["thresholded_edges"] = [[int(a), int(b)] for a, b in zip(u, v)]
    rec["verdict"] = verdict.to_dict()
    return rec


def _print_summary(summary: dict) -> None:
    width = max(len(k) for k in summary)
    _say("validity summary")
    for k, v in summary.items():
        _say(f"  {k.ljust(width)}  {v:>5}")
    if summary["total"]:
        _say(f"  {'fraction'.ljust(width)}  {summary['valid'] / summary['total']:.3f}")


def cmd_generate(ctx: Context, count: int | None = None, mode: str | None = None) -> int:
    cfg = ctx.cfg
    m = _load_latent(ctx)
    gpath = ctx.model_dir / "generator"
    _require(gpath.with_suffix(".json"), f"run `grassy train-gan --out {ctx.out}{_flag_text(ctx)}` first")
    gm = gan_mod.load_generator(gpath)
    ids, X, graphs = _features(ctx)
    X = _model_features(ctx, m, X, graphs)
    count = cfg.sampling.count if count is None else count
    mode = mode or cfg.sampling.mode
    samples = gan_mod.sample_molecules(gm, m, X, count, gm.config.sigma, seed=cfg.seed, mode=mode, ids=ids)
    records = [_sample_record(s, cfg.validity) for s in samples]
    atomic_write(ctx.model_dir / "samples.jsonl", "".join(json.dumps(r, sort_keys=True) + "\n" for r in records))
    _print_summary(val.rule_summary([val.ValidityVerdict(**r["verdict"]) for r in records]))
    return EXIT_OK


def _read_samples(path: Path) -> list[dict]:
    out = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            r = json.loads(line)
            r["soft_adjacency"] = np.array(r["soft_adjacency"], dtype=np.float64).reshape(r["n"], r["n"])
            out.append(r)
    return out


def cmd_validate(ctx: Context) -> int:
    path = _require(ctx.model_dir / "samples.jsonl", f"run `grassy generate --out {ctx.out}{_flag_text(ctx)}` first")
    records = [_sample_record(s, ctx.cfg.validity) for s in _read_samples(path)]
    atomic_write(path, "".join(json.dumps(r, sort_keys=True) + "\n" for r in records))
    _print_summary(val.rule_summary([val.ValidityVerdict(**r["verdict"]) for r in records]))
    return EXIT_OK


def cmd_metrics(ctx: Context) -> int:
    cfg = ctx.cfg
    ids, X, graphs = _features(ctx)
    present = [s for s in VARIANTS if (ctx.out / s / "latent.json").exists()]
    if not present:
        raise MissingPrerequisite(f"no trained models under {ctx.out}; run `grassy train-ae --out {ctx.out}` first")
    names = list(cfg.properties)
    P = _property_targets(cfg, graphs)
    report = met.MetricsReport(counts={"graphs": len(ids)})
    pos = {i: k for k, i in enumerate(ids)}
    for slug in present:
        label = VARIANTS[slug]
        sub = Context(cfg, ctx.out, ctx.data, variational=slug.startswith("vae"), regr=slug.endswith("regr"))
        m = _load_latent(sub)
        Xm = _model_features(ctx, m, X, graphs)
        split = json.loads(_require(ctx.out / slug / "split.json", "re-run train-ae").read_text())
        te = np.array([pos[i] for i in split["test"]], dtype=int)
        report.counts["test"] = len(te)
        met.export_latent(m, Xm, ids, P if names else np.zeros((len(ids), 0)), names, ctx.out / slug / "latent.csv")
        if names:
            if m.regressor is not None:
                report.property_error[label] = met.property_error(m, Xm[te], P[te], names)
            else:
                # no regressor in the model: fit a post-hoc probe on the frozen codes
                tr_split = {k: [pos[i] for i in v] for k, v in split.items()}
                data = lat.TrainingData(Xm, P, graphs, ids)
                probe, stats = lat.train_probe(m, data, names, tr_split, seed=cfg.seed, lr=1e-3)
                mu, sd = met.absolute_error_stats(P[te], lat.probe_predict(m, probe, stats, Xm[te]))
                report.property_error[label + " (probe)"] = {n: (float(a), float(b)) for n, a, b in zip(names, mu, sd)}
            Z = lat.encode(m, Xm)
            L = met.latent_knn_laplacian(Z, cfg.smoothness)
            report.smoothness[label] = {n: met.smoothness(Z, P[:, k], L=L) for k, n in enumerate(names)}
        spath = ctx.out / slug / "samples.jsonl"
        if spath.exists():
            samples = _read_samples(spath)
            verdicts = [val.judge(s["soft_adjacency"], cfg.validity)[1] for s in samples]
            if verdicts:
                summary = val.rule_summary(verdicts)
                report.validity[label] = {"fraction": summary["valid"] / summary["total"], **summary}
    if names and present:
        split = json.loads((ctx.out / present[0] / "split.json").read_text())
        tr = np.array([pos[i] for i in split["train"]], dtype=int)
        te = np.array([pos[i] for i in split["test"]], dtype=int)
        mu, sd = met.absolute_error_stats(P[te], np.tile(P[tr].mean(axis=0), (len(te), 1)))
        report.property_error["mean baseline"] = {n: (float(a), float(b)) for n, a, b in zip(names, mu, sd)}
    met.write_report(report, ctx.out)
    sys.stdout.write(report.tables())
    return EXIT_OK


# --------------------------------------------------------------------- main


COMMANDS = {
    "featurize": cmd_featurize,
    "train-ae": cmd_train_ae,
    "train-gan": cmd_train_gan,
    "generate": cmd_generate,
    "validate": cmd_validate,
    "metrics": cmd_metrics,
}


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2^64)")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="grassy", description="Scattering-moment autoencoders and latent-interpolation graph generation.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON run configuration")
        s.add_argument("--seed", type=_seed, help="overrides the config seed")
        s.add_argument("--out", default="grassy-out", help="output directory (default: grassy-out)")
        s.add_argument("--data", help="dataset JSONL, or fixture:<name> for a bundled fixture")
        s.add_argument("--variational", action="store_true", help="use the VAE variant")
        s.add_argument("--no-regr", action="store_true", help="train without the property regressor")
        s.add_argument("--scattering-mode", choices=("dyadic", "learned"))
        if name == "generate":
            s.add_argument("--count", type=int)
            s.add_argument("--mode", choices=("perturb", "interp"))
        if name == "validate":
            s.add_argument("--all-circuits", action="store_true", help="check every simple cycle, not only basis rings")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.scattering_mode is not None:
            cfg.scattering = _build("scattering", ScatteringConfig, {**dataclasses.asdict(cfg.scattering), "mode": args.scattering_mode})
        if getattr(args, "all_circuits", False):
            cfg.validity = dataclasses.replace(cfg.validity, all_circuits=True)
        data = resolve_dataset(args.data) if args.data else None
        if data is None and cfg.dataset is None and args.command in ("featurize", "train-ae", "train-gan", "generate", "metrics"):
            raise ConfigInvalid("dataset: no dataset given (use --data or the 'dataset' config field)")
        ctx = Context(cfg, Path(args.out), data, variational=args.variational, regr=not args.no_regr)
        if args.command == "generate":
            return cmd_generate(ctx, args.count, args.mode)
        return COMMANDS[args.command](ctx)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingPrerequisite as exc:
        print(f"missing prerequisite: {exc}", file=sys.stderr)
        return EXIT_PREREQ
    except DatasetUnreadable as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except GrassyError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
