"""Geometric scattering moments, regularised autoencoders and latent-interpolation graph generation."""

from .graph import DEFAULT_ALPHABET, AtomAlphabet, MolecularGraph, build_graph, lazy_walk, permute
from .smiles import parse_smiles
from .scattering import ScatteringConfig, LearnedScales, feature_dimension, featurize_dataset, scattering_for_graph
from .latent import LatentModel, LatentModelConfig, TrainingData, encode, train
from .gan import GeneratorConfig, GeneratorModel, sample_molecules, train_gan
from .validity import ValidityConfig, check_validity, judge, validity_fraction
from .metrics import SmoothnessConfig, latent_knn_laplacian, smoothness
from .io import load_fixture

__version__ = "0.1.0"
