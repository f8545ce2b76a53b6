"""Learning the diffusion scales instead of fixing them at powers of two.

The selector starts close to the dyadic wavelets and is trained jointly with
the autoencoder. The printout shows where the scale boundaries moved.

    python demos/04_learned_scales.py
"""

import numpy as np

from grassy import LatentModel, LatentModelConfig, LearnedScales, ScatteringConfig, TrainingData, featurize_dataset, load_fixture, train
from grassy.latent import property_matrix

graphs = load_fixture("fixture64")
names = ("ring_count",)
cfg = ScatteringConfig(mode="learned")
scales = LearnedScales(cfg.J, cfg.T)
X0 = featurize_dataset(graphs, cfg, scales=scales)

m = LatentModel(LatentModelConfig(X0.shape[1], property_names=names, max_epochs=40, patience=10), seed=0)
hist = train(m, TrainingData(X0, property_matrix(graphs, names), graphs=graphs), seed=0, scattering=cfg, scales=scales)
print(f"trained {len(hist.rows)} epochs, best validation loss {m.val_loss:.4f}")

np.set_printoptions(precision=2, suppress=True, linewidth=120)
F = scales.selector()
print("\nselector rows (weight on diffusion steps 0..T):")
print(F)
print("\nmean diffusion step per row:", np.round(F @ np.arange(cfg.T + 1), 2))
print("dyadic steps for comparison:", [0] + [2 ** (j - 1) for j in range(1, cfg.J + 1)])

X1 = featurize_dataset(graphs, cfg, scales=scales)
print(f"\nmean |change| in moments after training: {np.abs(X1 - X0).mean():.4f}")
