"""Train the interpolating generator and look at what comes out.

Fits a small AE+REGR, trains the generator for a few hundred steps, samples
around training codes and along interpolation paths, and runs the valence
and ring checks on every sample. Takes under half a minute on one core.

    python demos/03_generate_molecules.py
"""

from collections import Counter

import numpy as np

from grassy import (
    GeneratorConfig,
    LatentModel,
    LatentModelConfig,
    ScatteringConfig,
    TrainingData,
    ValidityConfig,
    featurize_dataset,
    judge,
    load_fixture,
    sample_molecules,
    train,
    train_gan,
)
from grassy.latent import property_matrix

graphs = load_fixture("fixture64")
names = ("ring_count", "heavy_atoms")
X = featurize_dataset(graphs, ScatteringConfig())
m = LatentModel(LatentModelConfig(X.shape[1], property_names=names, max_epochs=300, patience=30), seed=0)
train(m, TrainingData(X, property_matrix(graphs, names)), seed=0)

cfg = GeneratorConfig(n_max=max(g.n for g in graphs), latent_dim=m.config.latent_dim, steps=400)
gm, hist = train_gan(cfg, m, graphs, X, seed=0)
g_loss = hist.column("generator_loss")
print(f"generator loss {g_loss[0]:.3f} -> {np.mean(g_loss[-20:]):.3f} over {cfg.steps} steps")

vcfg = ValidityConfig(min_atoms=5)
ids = [g.id for g in graphs]
for mode in ("perturb", "interp"):
    samples = sample_molecules(gm, m, X, 50, sigma=0.1, seed=1, mode=mode, ids=ids)
    verdicts = [judge(s["soft_adjacency"], vcfg)[1] for s in samples]
    failures = Counter(r for v in verdicts for r in v.failed_rules)
    print(f"\n{mode}: {sum(v.valid for v in verdicts)}/50 valid")
    for rule, n in failures.most_common():
        print(f"  {rule:<20s} {n}")

# One sample in detail: thresholded edge list of the largest component.
disc, verdict = judge(samples[0]["soft_adjacency"], vcfg)
adj = disc.adjacency
edges = [(int(i), int(j)) for i, j in zip(*np.nonzero(np.triu(adj)))]
print(f"\nsample {samples[0]['sample_id']}: {adj.shape[0]} atoms, {len(edges)} bonds, largest ring {verdict.largest_ring}, valid={verdict.valid}")
print("  bonds:", edges)
