"""Trained embedding: RBF out-of-sample map, Lipschitz bound, persistence."""

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dataset import Standardizer
from .graph import sq_distances
from .kernel import gaussian, kernel_lipschitz

__all__ = ["FORMAT_VERSION", "ModelFormatError", "EmbeddingModel", "save", "load"]

FORMAT_VERSION = "nsse-model/1"


class ModelFormatError(ValueError):
    """A model file cannot be parsed or has the wrong schema/version."""


@dataclass(frozen=True, eq=False)
class EmbeddingModel:
    """Training embedding ``Y`` with its Gaussian RBF extension.

    The interpolator is ``f(x) = C^T phi(x)`` with
    ``phi(x)_i = exp(-||x - x_i||^2 / sigma^2)``, and ``C`` solves
    ``(Psi + ridge I) C = Y`` on the anchors.

    Attributes
    ----------
    anchors : (N, n) ndarray
        Training inputs after preprocessing.
    Y : (N, d) ndarray
    C : (N, d) ndarray
    sigma : float
    ridge : float
    labels : (N,) int ndarray
    n_classes : int
    hyperparams : dict
        ``mu1``, ``mu2``, ``mu3``, ``k``, ``beta`` and the method name.
    preprocessing : Standardizer or None
        Applied to raw queries before evaluation.
    class_names : tuple of str or None
    """

    anchors: np.ndarray
    Y: np.ndarray
    C: np.ndarray
    sigma: float
    ridge: float
    labels: np.ndarray
    n_classes: int
    hyperparams: dict = field(default_factory=dict)
    preprocessing: Optional[Standardizer] = None
    class_names: Optional[tuple] = None

    def __post_init__(self):
        # C-ordered float arrays, so a model evaluates identically to its reloaded copy
        for name in ("anchors", "Y", "C"):
            object.__setattr__(self, name, np.ascontiguousarray(getattr(self, name), dtype=float))
        object.__setattr__(self, "labels", np.ascontiguousarray(self.labels, dtype=np.int64))

    @property
    def n_anchors(self):
        return self.anchors.shape[0]

    @property
    def n_features(self):
        return self.anchors.shape[1]

    @property
    def dim(self):
        return self.Y.shape[1]

    def _prepare(self, Xq):
        Xq = np.asarray(Xq, dtype=float)
        if Xq.ndim == 1:
            Xq = Xq[None, :]
        if Xq.ndim != 2 or Xq.shape[1] != self.n_features:
            raise ValueError(f"queries must have {self.n_features} features, "
                             f"got shape {Xq.shape}")
        if not np.all(np.isfinite(Xq)):
            raise ValueError("queries contain non-finite values")
        if self.preprocessing is not None:
            Xq = self.preprocessing.transform(Xq)
        return Xq

    def embed_batch(self, Xq):
        """Map raw query rows ``(Q, n)`` to ``(Q, d)`` embedded coordinates."""
        Xq = self._prepare(Xq)
        if Xq.shape[0] == 0:
            return np.zeros((0, self.dim))
        # one query at a time so batch and per-point results agree bit-for-bit
        return np.vstack([self._embed_one(x) for x in Xq])

    def _embed_one(self, x):
        phi = gaussian(sq_distances(x[None, :], self.anchors)[0], self.sigma)
        return phi @ self.C

    def embed_point(self, x):
        """Embed a single raw query vector."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise ValueError("embed_point expects a 1-D vector")
        return self._embed_one(self._prepare(x)[0])

    def lipschitz_bound(self):
        """``sqrt(N) * L_phi * ||C||_F``, a Lipschitz constant of the interpolator."""
        return float(np.sqrt(self.n_anchors) * kernel_lipschitz(self.sigma)
                     * np.linalg.norm(self.C))

    def interpolation_residual(self):
        """``max_i ||f(x_i) - y_i||`` over the anchors."""
        Psi = gaussian(sq_distances(self.anchors), self.sigma)
        return float(np.max(np.linalg.norm(Psi @ self.C - self.Y, axis=1)))

    def to_dict(self):
        return {
            "version": FORMAT_VERSION,
            "n": int(self.n_features),
            "N": int(self.n_anchors),
            "d": int(self.dim),
            "n_classes": int(self.n_classes),
            "sigma": float(self.sigma),
            "ridge": float(self.ridge),
            "anchors": self.anchors.tolist(),
            "Y": self.Y.tolist(),
            "C": self.C.tolist(),
            "labels": self.labels.tolist(),
            "class_names": list(self.class_names) if self.class_names else None,
            "hyperparams": dict(self.hyperparams),
            "preprocessing": (self.preprocessing.to_dict()
                              if self.preprocessing is not None else None),
        }

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ModelFormatError("model document must be a JSON object")
        version = doc.get("version")
        if version != FORMAT_VERSION:
            raise ModelFormatError(
                f"unsupported model version {version!r}; expected {FORMAT_VERSION!r}")
        required = ("n", "N", "d", "n_classes", "sigma", "ridge", "anchors", "Y",
                    "C", "labels", "hyperparams", "preprocessing")
        missing = [k for k in required if k not in doc]
        if missing:
            raise ModelFormatError(f"model document is missing fields: {', '.join(missing)}")
        try:
            n, N, d = int(doc["n"]), int(doc["N"]), int(doc["d"])
            anchors = np.asarray(doc["anchors"], dtype=float).reshape(N, n)
            Y = np.asarray(doc["Y"], dtype=float).reshape(N, d)
            C = np.asarray(doc["C"], dtype=float).reshape(N, d)
            labels = np.asarray(doc["labels"], dtype=np.int64).reshape(N)
            pre = doc["preprocessing"]
            pre = Standardizer.from_dict(pre) if pre is not None else None
        except (TypeError, ValueError, KeyError) as exc:
            raise ModelFormatError(f"model document violates the schema: {exc}") from exc
        names = doc.get("class_names")
        return cls(anchors, Y, C, float(doc["sigma"]), float(doc["ridge"]), labels,
                   int(doc["n_classes"]), dict(doc["hyperparams"]), pre,
                   tuple(names) if names else None)


def dumps(model):
    return json.dumps(model.to_dict(), indent=1, sort_keys=True) + "\n"


def save(model, path):
    """Write ``model`` as versioned JSON; floats use round-trip ``repr``."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model))


def load(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(
            f"corrupt model file {path}: {exc.msg} at byte offset "
            f"{len(text[:exc.pos].encode('utf-8'))}") from exc
    return EmbeddingModel.from_dict(doc)
