"""Does a property head shape the latent space?

Trains an autoencoder with and without the regression term on the bundled
200-molecule fixture, then compares property error and latent smoothness.
Runs in a few seconds on one core.

    python demos/02_regression_ablation.py
"""

import numpy as np

from grassy import LatentModel, LatentModelConfig, ScatteringConfig, TrainingData, encode, featurize_dataset, load_fixture, smoothness, train
from grassy.latent import predict_properties, probe_predict, property_matrix, train_probe

graphs = load_fixture("fixture200")
names = ("ring_count", "heavy_atoms")
X = featurize_dataset(graphs, ScatteringConfig())
P = property_matrix(graphs, names)
data = TrainingData(X, P)
print(f"{len(graphs)} molecules, {X.shape[1]} moments each")

regr = LatentModel(LatentModelConfig(X.shape[1], property_names=names), seed=0)
hist = train(regr, data, seed=0)
plain = LatentModel(LatentModelConfig(X.shape[1]), seed=0)
train(plain, data, seed=0)
print(f"AE+REGR stopped at epoch {regr.epoch}, plain AE at epoch {plain.epoch}")

# The plain model has no regressor, so fit one afterwards on its frozen codes.
probe, stats = train_probe(plain, data, names, hist.split, seed=0, lr=1e-3)
tr, te = np.array(hist.split["train"]), np.array(hist.split["test"])
rows = {
    "mean baseline": np.abs(P[tr].mean(axis=0) - P[te]).mean(axis=0),
    "AE + probe": np.abs(probe_predict(plain, probe, stats, X[te]) - P[te]).mean(axis=0),
    "AE+REGR": np.abs(predict_properties(regr, X[te]) - P[te]).mean(axis=0),
}
print("\ntest MAE         " + "  ".join(f"{n:>12s}" for n in names))
for label, mae in rows.items():
    print(f"{label:<16s} " + "  ".join(f"{v:12.3f}" for v in mae))

print("\nlatent smoothness (lower means neighbours share property values)")
for label, m in [("AE", plain), ("AE+REGR", regr)]:
    Z = encode(m, X)
    print(f"  {label:<8s} " + "  ".join(f"{n}={smoothness(Z, P[:, k]):.4f}" for k, n in enumerate(names)))
