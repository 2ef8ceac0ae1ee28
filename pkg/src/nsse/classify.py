"""Nearest-neighbour classification, error reports and baselines."""

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset, standardize
from .graph import build_class_graph, sq_distances
from .model import EmbeddingModel
from .numerics import symmetric_eigen
from .optimizer import _ScaleSearch, default_sigma_grid

__all__ = ["EvalReport", "nn_label", "nn_predict", "evaluate", "report_from_predictions",
           "train_suplap", "ambient_nn"]


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Test-set confusion counts; rows are true classes, columns predictions."""

    confusion: np.ndarray

    @property
    def n_test(self):
        return int(self.confusion.sum())

    @property
    def n_classes(self):
        return self.confusion.shape[0]

    @property
    def error_rate(self):
        return 1.0 - np.trace(self.confusion) / self.n_test

    @property
    def per_class_error(self):
        counts = self.confusion.sum(axis=1)
        correct = np.diag(self.confusion)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(counts > 0, 1.0 - correct / np.maximum(counts, 1), np.nan)

    def to_dict(self):
        return {
            "n_test": self.n_test,
            "error_rate": float(self.error_rate),
            "per_class_error": [None if np.isnan(e) else float(e)
                                for e in self.per_class_error],
            "confusion": self.confusion.tolist(),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def to_csv(self, class_names=None):
        """One row per true class and a final ``all`` row."""
        M = self.n_classes
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["class", "n_test", "n_errors", "error_rate"]
                   + [f"pred_{j}" for j in range(M)])
        counts = self.confusion.sum(axis=1)
        for m in range(M):
            name = class_names[m] if class_names else m
            err = self.per_class_error[m]
            w.writerow([name, int(counts[m]), int(counts[m] - self.confusion[m, m]),
                        "" if np.isnan(err) else repr(float(err))]
                       + self.confusion[m].tolist())
        w.writerow(["all", self.n_test, int(self.n_test - np.trace(self.confusion)),
                    repr(float(self.error_rate))] + self.confusion.sum(axis=0).tolist())
        return buf.getvalue()


def nn_predict(Y_train, labels, Yq):
    """Label of the Euclidean-nearest training row for every query row."""
    Y_train = np.asarray(Y_train, dtype=float)
    Yq = np.atleast_2d(np.asarray(Yq, dtype=float))
    labels = np.asarray(labels)
    if Y_train.shape[0] < 1:
        raise ValueError("need at least one training point")
    if Yq.shape[0] == 0:
        return labels[:0].copy()
    # argmin returns the first (lowest-index) minimum
    return labels[np.argmin(sq_distances(Yq, Y_train), axis=1)]


def nn_label(Y_train, labels, y):
    """Label of the training embedding nearest to ``y``; ties go to the lower index."""
    return nn_predict(Y_train, labels, np.asarray(y, dtype=float)[None, :])[0]


def report_from_predictions(true, pred, n_classes):
    true = np.asarray(true, dtype=np.int64)
    if true.size == 0:
        raise ValueError("empty test set")
    conf = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(conf, (true, np.asarray(pred, dtype=np.int64)), 1)
    return EvalReport(conf)


def evaluate(model, test):
    """Embed ``test`` with the model's interpolator and classify by 1-NN."""
    if test.n_features != model.n_features:
        raise ValueError(f"test data has {test.n_features} features, model expects "
                         f"{model.n_features}")
    pred = nn_predict(model.Y, model.labels, model.embed_batch(test.X))
    return report_from_predictions(test.labels, pred, max(model.n_classes, test.n_classes))


def ambient_nn(train, test):
    """1-NN in the original feature space."""
    if train.n_features != test.n_features:
        raise ValueError("train and test feature dimensions differ")
    pred = nn_predict(train.X, train.labels, test.X)
    return report_from_predictions(test.labels, pred, max(train.n_classes, test.n_classes))


def train_suplap(ds, d, mu=100.0, k=5, sigma_grid=None, ridge=1e-8, *, mu2=0.0001,
                 mu3=1.0, beta=None, mutual=False, standardize_features=False):
    """Supervised Laplacian eigenmaps with a fitted Gaussian RBF extension.

    ``Y`` holds the ``d`` smallest eigenvectors of ``Lw - mu Lb``. The RBF
    scale is then the grid minimizer of ``mu2 tr(Y^T Psi^-2 Y) + mu3 / sigma^2``
    for that fixed ``Y``, and ``C = (Psi + ridge I)^{-1} Y``.
    """
    if d > ds.n_samples:
        raise ValueError(f"embedding dimension d={d} exceeds N={ds.n_samples}")
    pre = None
    if standardize_features:
        ds, pre = standardize(ds)
    X = ds.X
    graph = build_class_graph(X, ds.labels, k=k, beta=beta, mutual=mutual)
    _, Y = symmetric_eigen(graph.Lw - mu * graph.Lb, d)
    grid = np.asarray(sigma_grid if sigma_grid is not None else default_sigma_grid(X))
    search = _ScaleSearch(X, ridge)
    sigma = search.argmin(Y, grid, mu2, mu3)
    ks = search.system(sigma)
    hyper = {"method": "suplap", "mu1": float(mu), "mu2": float(mu2), "mu3": float(mu3),
             "k": int(k), "beta": float(graph.beta)}
    return EmbeddingModel(X.copy(), Y, ks.solve(Y), float(sigma), float(ks.ridge),
                          ds.labels.copy(), ds.n_classes, hyper, pre, ds.class_names)
