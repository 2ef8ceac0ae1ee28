"""Alternating minimization of the joint embedding / interpolator objective.

The objective over an orthonormal embedding ``Y`` (``Y^T Y = I``) and the
kernel scale ``sigma`` is::

    tr(Y^T Lw Y) - mu1 tr(Y^T Lb Y) + mu2 tr(Y^T Psi^-2 Y) + mu3 / sigma^2

With ``sigma`` fixed the minimizer in ``Y`` is given by the ``d`` smallest
eigenvectors of ``Lw - mu1 Lb + mu2 Psi^-2``; with ``Y`` fixed ``sigma`` is
chosen by exhaustive search over a grid. Both steps are global minimizations
over their block, so the objective never increases.
"""

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._parallel import pmap
from .dataset import DatasetError, standardize
from .graph import build_class_graph, sq_distances
from .kernel import KernelConditioningError, quad_form_inv_sq, regularized_system
from .model import EmbeddingModel
from .numerics import symmetric_eigen

__all__ = [
    "DEFAULT_GRIDS",
    "TrainConfig",
    "IterationRecord",
    "TrainTrace",
    "default_sigma_grid",
    "snap_to_grid",
    "objective_terms",
    "objective",
    "solve_embedding",
    "search_sigma",
    "train",
    "cross_validate",
]

logger = logging.getLogger(__name__)

DEFAULT_GRIDS = {
    "mu1": (100.0, 300.0, 1000.0),
    "mu2": (0.0001, 0.0003, 0.001),
    "mu3": (1.0, 2.5, 5.0),
}


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run.

    ``sigma_grid=None`` selects :func:`default_sigma_grid`; ``sigma_init=None``
    selects the median pairwise distance. Either way the initial scale is
    snapped to the grid.
    """

    d: int
    mu1: float = 100.0
    mu2: float = 0.0001
    mu3: float = 1.0
    k: int = 5
    sigma_grid: Optional[Sequence[float]] = None
    sigma_init: Optional[float] = None
    max_iter: int = 50
    rel_tol: float = 1e-6
    ridge: float = 1e-8
    seed: int = 0
    beta: Optional[float] = None
    mutual: bool = False
    standardize: bool = False

    def __post_init__(self):
        if not (isinstance(self.d, (int, np.integer)) and self.d >= 1):
            raise ValueError(f"d must be a positive integer, got {self.d!r}")
        for name in ("mu1", "mu2", "mu3"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.k < 1:
            raise ValueError("k must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.ridge < 0:
            raise ValueError("ridge must be non-negative")
        if self.sigma_grid is not None:
            grid = tuple(float(s) for s in self.sigma_grid)
            if not grid or any(not s > 0 for s in grid):
                raise ValueError("sigma_grid must be a non-empty list of positive values")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValueError("sigma_grid must be strictly ascending")
            object.__setattr__(self, "sigma_grid", grid)
        if self.sigma_init is not None and not self.sigma_init > 0:
            raise ValueError("sigma_init must be positive")

    def to_dict(self):
        d = dataclasses.asdict(self)
        if d["sigma_grid"] is not None:
            d["sigma_grid"] = list(d["sigma_grid"])
        return d


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    objective: float
    sigma: float
    term_lw: float
    term_lb: float
    term_psi: float
    term_sigma: float
    ridge: float


@dataclass
class TrainTrace:
    records: list = field(default_factory=list)
    converged: bool = False

    CSV_COLUMNS = ("iter", "objective", "sigma", "term_lw", "term_lb",
                   "term_psi", "term_sigma")

    def __len__(self):
        return len(self.records)

    @property
    def objectives(self):
        return np.array([r.objective for r in self.records])

    @property
    def sigmas(self):
        return np.array([r.sigma for r in self.records])

    def rows(self):
        for r in self.records:
            yield tuple(getattr(r, c) for c in self.CSV_COLUMNS)


def _pairwise_distances(X):
    iu = np.triu_indices(X.shape[0], 1)
    return np.sqrt(sq_distances(X)[iu])


def default_sigma_grid(X, n_points=40):
    """Log-spaced scales between the 1st and 99th percentile of pairwise distances.

    Zero distances (duplicates) are ignored. Returns a single point when the
    two percentiles coincide.
    """
    dist = _pairwise_distances(np.asarray(X, dtype=float))
    dist = dist[dist > 0]
    if dist.size == 0:
        raise DatasetError("cannot build a sigma grid: all points are identical")
    lo, hi = np.percentile(dist, [1, 99])
    if hi <= lo * (1 + 1e-12):
        return (float(lo),)
    return tuple(float(s) for s in np.geomspace(lo, hi, n_points))


def snap_to_grid(sigma, grid):
    """Grid point closest to ``sigma`` in log scale (ties go to the smaller)."""
    grid = np.asarray(grid, dtype=float)
    return float(grid[np.argmin(np.abs(np.log(grid) - np.log(sigma)))])


def objective_terms(Y, ks, Lw, Lb):
    """Unweighted ``tr(Y^T Lw Y)``, ``tr(Y^T Lb Y)`` and ``tr(Y^T Psi^-2 Y)``."""
    Y = np.asarray(Y, dtype=float)
    return (float(np.sum(Y * (Lw @ Y))), float(np.sum(Y * (Lb @ Y))),
            quad_form_inv_sq(ks, Y))


def _combine(t_lw, t_lb, t_psi, sigma, mu1, mu2, mu3):
    # grouped as (graph part) + (sigma-dependent part) so that the sigma
    # search and the recorded objective round identically
    return (t_lw - mu1 * t_lb) + (mu2 * t_psi + mu3 / sigma ** 2)


def objective(Y, ks, Lw, Lb, cfg):
    """Full objective for an orthonormal ``Y`` at the scale of ``ks``."""
    Y = np.asarray(Y, dtype=float)
    N = Lw.shape[0]
    if Y.ndim != 2 or Y.shape[0] != N or Lb.shape != Lw.shape or ks.n_anchors != N:
        raise ValueError("dimension mismatch between Y, Laplacians and kernel")
    if np.max(np.abs(Y.T @ Y - np.eye(Y.shape[1]))) > 1e-6:
        raise ValueError("Y must have orthonormal columns")
    return _combine(*objective_terms(Y, ks, Lw, Lb), ks.sigma, cfg.mu1, cfg.mu2, cfg.mu3)


def embedding_matrix(Lw, Lb, ks, mu1, mu2):
    """``Lw - mu1 Lb + mu2 Psi^-2`` with the ridge-regularized inverse."""
    A = np.asarray(Lw, dtype=float) - mu1 * np.asarray(Lb, dtype=float)
    if mu2 != 0:
        A = A + mu2 * ks.inverse_squared()
    return A


def solve_embedding(Lw, Lb, ks, mu1, mu2, d):
    """Orthonormal ``Y`` minimizing ``tr(Y^T (Lw - mu1 Lb + mu2 Psi^-2) Y)``."""
    _, Y = symmetric_eigen(embedding_matrix(Lw, Lb, ks, mu1, mu2), d)
    return Y


class _ScaleSearch:
    """Kernel systems over a sigma grid, sharing one distance matrix."""

    def __init__(self, X, ridge):
        self.X = np.asarray(X, dtype=float)
        self.sq = sq_distances(self.X)
        self.ridge = ridge

    def system(self, sigma):
        return regularized_system(self.X, sigma, self.ridge, sq_dist=self.sq)

    def scores(self, Y, grid, mu2, mu3):
        def score(sigma):
            try:
                ks = self.system(sigma)
            except KernelConditioningError:
                return np.inf
            return mu2 * quad_form_inv_sq(ks, Y) + mu3 / sigma ** 2
        return np.array(pmap(score, grid))

    def argmin(self, Y, grid, mu2, mu3):
        s = self.scores(Y, grid, mu2, mu3)
        if not np.any(np.isfinite(s)):
            raise KernelConditioningError(
                "kernel factorization failed at every sigma grid point")
        # np.argmin returns the first minimum, i.e. the smallest sigma on ties
        return float(grid[int(np.argmin(s))])


def search_sigma(Y, X, sigma_grid, mu2, mu3, ridge=1e-8):
    """Grid minimizer of ``mu2 tr(Y^T Psi^-2 Y) + mu3 / sigma^2``.

    Grid points where the kernel cannot be factored score ``+inf``; ties go
    to the smaller sigma.
    """
    grid = np.asarray(sigma_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("sigma grid is empty")
    return _ScaleSearch(X, ridge).argmin(np.asarray(Y, dtype=float), grid, mu2, mu3)


def _check_train_inputs(ds, cfg):
    N = ds.n_samples
    if cfg.d > N:
        raise ValueError(f"embedding dimension d={cfg.d} exceeds the number of "
                         f"training samples N={N}")
    if N < 2 or np.all(ds.X == ds.X[0]):
        raise DatasetError("degenerate dataset: all training points are identical")
    if cfg.k > N - 1:
        raise ValueError(f"k={cfg.k} neighbours requested but only N-1={N - 1} available")


def train(ds, cfg):
    """Learn an embedding and its RBF interpolator by alternating minimization.

    Returns
    -------
    model : EmbeddingModel
    trace : TrainTrace
        One record per iteration, taken after the sigma step.
    """
    _check_train_inputs(ds, cfg)
    pre = None
    if cfg.standardize:
        ds, pre = standardize(ds)
    X, labels = ds.X, ds.labels
    graph = build_class_graph(X, labels, k=cfg.k, beta=cfg.beta, mutual=cfg.mutual)
    Lw, Lb = graph.Lw, graph.Lb

    grid = np.asarray(cfg.sigma_grid if cfg.sigma_grid is not None
                      else default_sigma_grid(X))
    init = cfg.sigma_init if cfg.sigma_init is not None else float(
        np.median(_pairwise_distances(X)))
    sigma = snap_to_grid(init, grid) if init > 0 else float(grid[0])

    search = _ScaleSearch(X, cfg.ridge)
    ks = search.system(sigma)
    trace = TrainTrace()
    Y = None
    prev = None
    for it in range(1, cfg.max_iter + 1):
        Y_new = solve_embedding(Lw, Lb, ks, cfg.mu1, cfg.mu2, cfg.d)
        if Y is not None and objective(Y_new, ks, Lw, Lb, cfg) > objective(Y, ks, Lw, Lb, cfg):
            # eigensolver round-off; the incumbent is at least as good
            Y_new = Y
        Y = Y_new
        sigma = search.argmin(Y, grid, cfg.mu2, cfg.mu3)
        ks = search.system(sigma)
        t_lw, t_lb, t_psi = objective_terms(Y, ks, Lw, Lb)
        obj = _combine(t_lw, t_lb, t_psi, sigma, cfg.mu1, cfg.mu2, cfg.mu3)
        trace.records.append(IterationRecord(it, obj, sigma, t_lw, t_lb, t_psi,
                                             cfg.mu3 / sigma ** 2, ks.ridge))
        logger.debug("iter %d objective %.12g sigma %.6g", it, obj, sigma)
        if prev is not None and abs(obj - prev) / (1 + abs(prev)) < cfg.rel_tol:
            trace.converged = True
            break
        prev = obj

    C = ks.solve(Y)
    hyper = {"method": "nsse", "mu1": float(cfg.mu1), "mu2": float(cfg.mu2),
             "mu3": float(cfg.mu3), "k": int(cfg.k), "beta": float(graph.beta)}
    model = EmbeddingModel(X.copy(), Y, C, float(sigma), float(ks.ridge), labels.copy(),
                           ds.n_classes, hyper, pre, ds.class_names)
    return model, trace


def validation_splits(ds, folds, seed, train_fraction=0.7):
    """``folds`` stratified random train/validation index pairs."""
    counts = ds.class_counts()
    if counts.min() < 2:
        raise DatasetError("cross-validation needs at least 2 samples in every class")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(folds):
        tr, va = [], []
        for m in range(ds.n_classes):
            members = rng.permutation(np.flatnonzero(ds.labels == m))
            n_tr = int(min(len(members) - 1, max(1, round(train_fraction * len(members)))))
            tr.append(members[:n_tr])
            va.append(members[n_tr:])
        out.append((np.sort(np.concatenate(tr)), np.sort(np.concatenate(va))))
    return out


def cross_validate(ds, base_cfg, grids=None, folds=5, seed=0, train_fraction=0.7,
                   return_scores=False):
    """Tune ``mu1``, ``mu2``, ``mu3`` one at a time by repeated hold-out.

    For each parameter in turn the others stay fixed; every candidate is
    trained on the same ``folds`` random 70/30 splits and the value with the
    lowest mean validation error wins (ties go to the smaller value).
    Parameters missing from ``grids`` use :data:`DEFAULT_GRIDS`; pass a
    singleton list to pin one.
    """
    from .classify import evaluate

    grids = {**DEFAULT_GRIDS, **(grids or {})}
    for name in ("mu1", "mu2", "mu3"):
        if len(grids[name]) == 0:
            raise ValueError(f"grid for {name} is empty")
    if folds < 1:
        raise ValueError("folds must be positive")
    splits = validation_splits(ds, folds, seed, train_fraction)
    cfg = base_cfg
    scores = {}
    for name in ("mu1", "mu2", "mu3"):
        candidates = sorted(float(v) for v in grids[name])
        if len(candidates) == 1:
            cfg = dataclasses.replace(cfg, **{name: candidates[0]})
            scores[name] = {candidates[0]: None}
            continue
        scores[name] = {}
        best, best_err = None, np.inf
        for value in candidates:
            trial = dataclasses.replace(cfg, **{name: value})

            def fold_error(idx, trial=trial):
                model, _ = train(ds.subset(idx[0]), trial)
                return evaluate(model, ds.subset(idx[1])).error_rate

            err = float(np.mean(pmap(fold_error, splits)))
            scores[name][value] = err
            logger.info("cv %s=%g mean validation error %.4f", name, value, err)
            if err < best_err:
                best, best_err = value, err
        cfg = dataclasses.replace(cfg, **{name: best})
    return (cfg, scores) if return_scores else cfg
