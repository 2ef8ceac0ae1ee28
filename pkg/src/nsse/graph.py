"""k-NN graph and the within-/between-class weight matrices and Laplacians."""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .numerics import as_symmetric

__all__ = [
    "ClassGraph",
    "sq_distances",
    "knn_edges",
    "heuristic_beta",
    "class_weights",
    "laplacian",
    "build_class_graph",
]


def sq_distances(X, Z=None):
    """Pairwise squared Euclidean distances, computed per pair (no cancellation)."""
    X = np.asarray(X, dtype=float)
    Z = X if Z is None else np.asarray(Z, dtype=float)
    return cdist(X, Z, "sqeuclidean")


def knn_edges(X, k, mutual=False):
    """Symmetric k-nearest-neighbour adjacency.

    ``i ~ j`` when ``j`` is among the ``k`` nearest points of ``i`` or vice
    versa (both, if ``mutual``). Distance ties go to the lower index.

    Returns
    -------
    (N, N) bool ndarray, symmetric, with a false diagonal.
    """
    X = np.asarray(X, dtype=float)
    N = X.shape[0]
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= N - 1):
        raise ValueError(f"k must be an integer in [1, {N - 1}], got {k!r}")
    D = sq_distances(X)
    np.fill_diagonal(D, np.inf)
    # stable sort keeps index order among equal distances
    nearest = np.argsort(D, axis=1, kind="stable")[:, :k]
    directed = np.zeros((N, N), dtype=bool)
    directed[np.repeat(np.arange(N), k), nearest.ravel()] = True
    return directed & directed.T if mutual else directed | directed.T


def heuristic_beta(X, edges):
    """Mean squared edge length; 1.0 if every edge has zero length."""
    X = np.asarray(X, dtype=float)
    i, j = np.nonzero(np.triu(edges, 1))
    if i.size == 0:
        raise ValueError("edge set is empty")
    beta = float(np.mean(np.sum((X[i] - X[j]) ** 2, axis=1)))
    return beta if beta > 0 else 1.0


def class_weights(X, labels, edges, beta):
    """Within-class Gaussian weights on edges, and dense between-class indicators.

    Returns
    -------
    Ww : (N, N) ndarray
        ``exp(-||x_i - x_j||^2 / beta)`` for same-class neighbours, else 0.
    Wb : (N, N) ndarray
        1 for every pair with different labels, else 0.
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    labels = np.asarray(labels)
    same = labels[:, None] == labels[None, :]
    Ww = np.where(same & edges, np.exp(-sq_distances(X) / beta), 0.0)
    np.fill_diagonal(Ww, 0.0)
    Wb = (~same).astype(float)
    return Ww, Wb


def laplacian(W):
    """Unnormalized graph Laplacian ``D - W``."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("W must be square")
    if np.max(np.abs(W - W.T), initial=0.0) > 1e-10:
        raise ValueError("W is not symmetric")
    if np.any(np.diag(W) != 0):
        raise ValueError("W must have a zero diagonal")
    W = as_symmetric(W)
    return np.diag(W.sum(axis=1)) - W


@dataclass(frozen=True, eq=False)
class ClassGraph:
    edges: np.ndarray
    Ww: np.ndarray
    Wb: np.ndarray
    Lw: np.ndarray
    Lb: np.ndarray
    k: int
    beta: float


def build_class_graph(X, labels, k=5, beta=None, mutual=False):
    """Assemble the neighbourhood graph, class weights and both Laplacians."""
    edges = knn_edges(X, k, mutual=mutual)
    if beta is None:
        beta = heuristic_beta(X, edges)
    Ww, Wb = class_weights(X, labels, edges, beta)
    return ClassGraph(edges, Ww, Wb, laplacian(Ww), laplacian(Wb), int(k), float(beta))
