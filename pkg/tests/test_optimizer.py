import dataclasses
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import nsse.classify
import nsse.optimizer as opt
from nsse.classify import evaluate
from nsse.dataset import DatasetError, LabeledDataset, SplitSpec, split, synth_blobs, synth_moons
from nsse.graph import build_class_graph
from nsse.kernel import kernel_matrix, quad_form_inv_sq, regularized_system
from nsse.numerics import symmetric_eigen
from nsse.optimizer import (TrainConfig, cross_validate, default_sigma_grid, objective,
                            search_sigma, snap_to_grid, solve_embedding, train)


def orthonormal(rng, N, d):
    Q, _ = np.linalg.qr(rng.standard_normal((N, d)))
    return Q


def small_problem(seed, N=12):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((N, 2))
    labels = np.arange(N) % 3
    g = build_class_graph(X, labels, k=3)
    return rng, X, labels, g


def test_objective_trivial_cases():
    rng = np.random.default_rng(0)
    N, d = 6, 3
    X = 1e3 * np.arange(N, dtype=float)[:, None]  # Psi == I to machine precision
    ks = regularized_system(X, 1.0, ridge=0.0)
    Z = np.zeros((N, N))
    Y = orthonormal(rng, N, d)
    cfg = TrainConfig(d, mu1=7.0, mu2=0.25, mu3=0.0)
    assert objective(Y, ks, Z, Z, cfg) == pytest.approx(0.25 * d)
    _, X, labels, g = small_problem(1, N)
    ks = regularized_system(X, 1.0)
    cfg = TrainConfig(d, mu1=0.0, mu2=0.0, mu3=0.0)
    val = objective(Y, ks, g.Lw, g.Lb, cfg)
    assert val >= 0 and val == pytest.approx(np.trace(Y.T @ g.Lw @ Y))


def test_objective_matches_pair_sums():
    for seed in range(5):
        rng, X, labels, g = small_problem(seed)
        N = len(X)
        ks = regularized_system(X, 0.9, ridge=0.0)
        Y = orthonormal(rng, N, 2)
        cfg = TrainConfig(2, mu1=3.0, mu2=0.01, mu3=2.0)
        lw = sum(g.Ww[i, j] * np.sum((Y[i] - Y[j]) ** 2)
                 for i in range(N) for j in range(i + 1, N))
        lb = sum(np.sum((Y[i] - Y[j]) ** 2)
                 for i in range(N) for j in range(i + 1, N) if labels[i] != labels[j])
        Pinv = np.linalg.inv(kernel_matrix(X, 0.9))
        psi = np.trace(Y.T @ Pinv @ Pinv @ Y)
        expected = lw - 3.0 * lb + 0.01 * psi + 2.0 / 0.9 ** 2
        assert objective(Y, ks, g.Lw, g.Lb, cfg) == pytest.approx(expected, rel=1e-8)


def test_objective_rejects_bad_inputs():
    _, X, _, g = small_problem(0)
    ks = regularized_system(X, 1.0)
    cfg = TrainConfig(2)
    with pytest.raises(ValueError, match="orthonormal"):
        objective(np.ones((12, 2)), ks, g.Lw, g.Lb, cfg)
    with pytest.raises(ValueError, match="mismatch"):
        objective(np.eye(5)[:, :2], ks, g.Lw, g.Lb, cfg)


def test_solve_embedding_reduces_to_laplacian_eigenmaps():
    _, X, _, g = small_problem(2)
    ks = regularized_system(X, 1.0)
    Y = solve_embedding(g.Lw, np.zeros_like(g.Lb), ks, 0.0, 0.0, 3)
    np.testing.assert_array_equal(Y, symmetric_eigen(g.Lw, 3)[1])


def test_solve_embedding_square_case():
    _, X, _, g = small_problem(3, N=8)
    ks = regularized_system(X, 1.0)
    A = opt.embedding_matrix(g.Lw, g.Lb, ks, 2.0, 0.01)
    Y = solve_embedding(g.Lw, g.Lb, ks, 2.0, 0.01, 8)
    np.testing.assert_allclose(Y.T @ Y, np.eye(8), atol=1e-8)
    assert np.trace(Y.T @ A @ Y) == pytest.approx(np.trace(A), rel=1e-9, abs=1e-9)


def test_solve_embedding_beats_random_competitors():
    for seed in range(5):
        rng, X, _, g = small_problem(seed, N=15)
        ks = regularized_system(X, 1.2)
        A = opt.embedding_matrix(g.Lw, g.Lb, ks, 5.0, 0.001)
        Y = solve_embedding(g.Lw, g.Lb, ks, 5.0, 0.001, 2)
        np.testing.assert_allclose(Y.T @ Y, np.eye(2), atol=1e-8)
        best = np.trace(Y.T @ A @ Y)
        for _ in range(100):
            V = orthonormal(rng, 15, 2)
            assert best <= np.trace(V.T @ A @ V) + 1e-9 * (1 + abs(best))


def test_search_sigma_examples():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((5, 2))
    Y = orthonormal(rng, 5, 2)
    assert search_sigma(Y, X, [0.7], 1e-3, 1.0) == 0.7
    # single anchor: Psi = [1], objective decreasing in sigma
    assert search_sigma([[0.6]], [[1.0, 2.0]], [0.5, 1.0, 4.0], 1e-3, 1.0) == 4.0
    with pytest.raises(ValueError):
        search_sigma(Y, X, [], 1e-3, 1.0)


def test_search_sigma_avoids_ill_conditioned_scale():
    X = np.array([[0.0], [1.0]])
    Y = np.eye(2)
    ridge = 1e-8
    # oracle: evaluate both points directly
    vals = {s: quad_form_inv_sq(regularized_system(X, s, ridge), Y) for s in (0.1, 1e6)}
    assert vals[0.1] < vals[1e6]
    assert search_sigma(Y, X, [0.1, 1e6], 1.0, 0.0, ridge) == 0.1


def test_search_sigma_ties_to_smaller():
    X = 1e3 * np.arange(3, dtype=float)[:, None]
    Y = np.eye(3)[:, :1]
    # Psi == I at both scales and mu3 = 0, so the scores are identical
    assert search_sigma(Y, X, [1.0, 2.0], 1.0, 0.0) == 1.0


def test_snap_and_default_grid():
    assert snap_to_grid(3.0, [1.0, 2.0, 10.0]) == 2.0
    assert snap_to_grid(1.4, [1.0, 2.0]) == 1.0
    X = np.random.default_rng(0).standard_normal((30, 3))
    grid = default_sigma_grid(X)
    assert len(grid) == 40 and all(b > a for a, b in zip(grid, grid[1:]))
    with pytest.raises(DatasetError):
        default_sigma_grid(np.zeros((4, 2)))


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(0)
    with pytest.raises(ValueError):
        TrainConfig(2, sigma_grid=[2.0, 1.0])
    with pytest.raises(ValueError):
        TrainConfig(2, sigma_grid=[])
    assert TrainConfig(2, sigma_grid=[1, 2]).sigma_grid == (1.0, 2.0)


def test_train_rejects_degenerate_inputs():
    ds = synth_blobs(2, 5, 2, 1.0, 5.0)
    with pytest.raises(ValueError, match="exceeds"):
        train(ds, TrainConfig(11))
    flat = LabeledDataset(np.zeros((4, 2)), [0, 0, 1, 1], 2)
    with pytest.raises(DatasetError, match="identical"):
        train(flat, TrainConfig(1, k=1))


def test_train_single_iteration():
    ds = synth_moons(10, 0.1)
    model, trace = train(ds, TrainConfig(2, max_iter=1))
    assert len(trace) == 1 and not trace.converged
    assert model.C.shape == (20, 2)


@pytest.fixture(scope="module")
def moons_run():
    ds = synth_moons(25, 0.1, seed=3)
    cfg = TrainConfig(2, sigma_grid=tuple(np.geomspace(0.05, 2.0, 15)))
    return ds, cfg, *train(ds, cfg)


def test_train_descent_and_orthonormality(moons_run):
    ds, cfg, model, trace = moons_run
    obj = trace.objectives
    assert np.all(np.isfinite(obj))
    assert np.all(np.diff(obj) <= 1e-9)
    np.testing.assert_allclose(model.Y.T @ model.Y, np.eye(2), atol=1e-8)


def test_train_term_consistency(moons_run):
    ds, cfg, model, trace = moons_run
    last = trace.records[-1]
    ks = regularized_system(ds.X, last.sigma, cfg.ridge)
    assert last.term_psi == pytest.approx(quad_form_inv_sq(ks, model.Y), rel=1e-8)
    assert last.term_sigma == pytest.approx(cfg.mu3 / last.sigma ** 2)
    g = build_class_graph(ds.X, ds.labels, k=cfg.k)
    assert last.term_lw == pytest.approx(np.trace(model.Y.T @ g.Lw @ model.Y), rel=1e-10)


def test_positivity_when_matrix_is_psd():
    ds = synth_moons(15, 0.1, seed=1)
    cfg = TrainConfig(2, mu1=1e-4, mu2=1e-3, sigma_grid=(0.2, 0.5, 1.0))
    g = build_class_graph(ds.X, ds.labels, k=cfg.k)
    model, trace = train(ds, cfg)
    for r in trace.records:
        ks = regularized_system(ds.X, r.sigma, cfg.ridge)
        A = opt.embedding_matrix(g.Lw, g.Lb, ks, cfg.mu1, cfg.mu2)
        if np.linalg.eigvalsh(A).min() >= -1e-8:
            assert r.term_lw - cfg.mu1 * r.term_lb + cfg.mu2 * r.term_psi >= -1e-8


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.floats(1.0, 1000.0))
def test_descent_property(seed, mu1):
    ds = synth_moons(8, 0.15, seed=seed)
    _, trace = train(ds, TrainConfig(2, mu1=mu1, max_iter=10))
    assert np.all(np.diff(trace.objectives) <= 1e-9)


def test_train_deterministic():
    ds = synth_moons(12, 0.1, seed=4)
    a, _ = train(ds, TrainConfig(2))
    b, _ = train(ds, TrainConfig(2))
    assert a.C.tobytes() == b.C.tobytes() and a.sigma == b.sigma


def test_separable_blobs_classified_perfectly():
    ds = synth_blobs(3, 20, 5, 0.1, 100.0, seed=0)
    train_ds, test_ds = split(ds, SplitSpec(5, seed=1))
    model, _ = train(train_ds, TrainConfig(2, k=3))
    assert evaluate(model, test_ds).error_rate == 0.0


def test_cv_singleton_grids_echo():
    ds = synth_moons(10, 0.1)
    base = TrainConfig(2, mu1=17.0, mu2=0.02, mu3=3.0)
    out = cross_validate(ds, base, {"mu1": [17.0], "mu2": [0.02], "mu3": [3.0]}, folds=2)
    assert out == base


def test_cv_picks_dominating_value(monkeypatch):
    errors = {5.0: 0.1, 1.0: 0.3}
    calls = []

    def fake_train(ds, cfg):
        calls.append(cfg.mu1)
        return SimpleNamespace(mu1=cfg.mu1), None

    def fake_eval(model, test):
        return SimpleNamespace(error_rate=errors[model.mu1])

    monkeypatch.setattr(opt, "train", fake_train)
    monkeypatch.setattr(nsse.classify, "evaluate", fake_eval)
    ds = synth_moons(10, 0.1)
    out = cross_validate(ds, TrainConfig(2), {"mu1": [1.0, 5.0], "mu2": [1e-3], "mu3": [1.0]},
                         folds=3)
    assert out.mu1 == 5.0 and len(calls) == 6
    errors[1.0] = 0.1
    calls.clear()
    assert cross_validate(ds, TrainConfig(2), {"mu1": [5.0, 1.0], "mu2": [1e-3],
                                               "mu3": [1.0]}, folds=3).mu1 == 1.0


def test_cv_rejects_tiny_class():
    ds = LabeledDataset([[0.0], [1.0], [2.0]], [0, 0, 1], 2)
    with pytest.raises(DatasetError):
        cross_validate(ds, TrainConfig(1, k=1), folds=2)


def test_cv_no_worse_than_worst_grid_config():
    ds = synth_moons(40, 0.15, seed=2)
    train_ds, test_ds = split(ds, SplitSpec(20, seed=2))
    grids = {"mu1": [1.0, 100.0], "mu2": [1e-4, 1e-2], "mu3": [1.0, 5.0]}
    base = TrainConfig(2, k=4)
    chosen = cross_validate(train_ds, base, grids, folds=2, seed=0)
    for name in grids:
        assert getattr(chosen, name) in grids[name]
    # oracle: test error of every grid configuration
    errs = []
    for m1 in grids["mu1"]:
        for m2 in grids["mu2"]:
            for m3 in grids["mu3"]:
                cfg = dataclasses.replace(base, mu1=m1, mu2=m2, mu3=m3)
                errs.append(evaluate(train(train_ds, cfg)[0], test_ds).error_rate)
    got = evaluate(train(train_ds, chosen)[0], test_ds).error_rate
    assert got <= max(errs)
