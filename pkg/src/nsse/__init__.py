"""Supervised nonlinear dimensionality reduction with smooth RBF extensions.

Learns a low-dimensional embedding of labeled training data jointly with a
Gaussian RBF interpolator that carries the embedding to unseen points, by
alternating between an eigenproblem in the embedding and a grid search in
the kernel scale.
"""

from .classify import EvalReport, ambient_nn, evaluate, nn_label, train_suplap
from .dataset import (LabeledDataset, SplitSpec, load_csv, split, standardize,
                      synth_blobs, synth_moons)
from .diagnostics import DiagnosticsReport, diagnose
from .model import EmbeddingModel, load, save
from .optimizer import TrainConfig, TrainTrace, cross_validate, train

__version__ = "0.1.0"

__all__ = [
    "EvalReport", "ambient_nn", "evaluate", "nn_label", "train_suplap",
    "LabeledDataset", "SplitSpec", "load_csv", "split", "standardize",
    "synth_blobs", "synth_moons",
    "DiagnosticsReport", "diagnose",
    "EmbeddingModel", "load", "save",
    "TrainConfig", "TrainTrace", "cross_validate", "train",
]
