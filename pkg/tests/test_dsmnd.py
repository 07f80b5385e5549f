import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scorekit.dsmnd import (
    build_wedge_features,
    column_count,
    default_lambda,
    dsm_objective_nd,
    fit_wedge_dsm,
    predict_wedge_score,
    solve_dsm_multivariate,
)
from scorekit.errors import DimensionMismatch, DimensionTooSmall
from scorekit.prox import least_squares_min_norm
from scorekit.smnd import ActivationPattern, enumerate_patterns, pattern_mask, stacked_design


def wedge_oracle(X, x, p=2):
    """Per-column recomputation with explicit 2x2 determinants."""
    out = np.zeros(len(X))
    for j, xj in enumerate(X):
        det = x[0] * xj[1] - x[1] * xj[0]
        out[j] = max(det, 0.0) / np.linalg.norm(xj, ord=p)
    return out


def gradient_descent_ls(Xt, L, iters=50_000):
    """Oracle: plain gradient descent on 1/2 ||Xt W - L||^2 from zero."""
    W = np.zeros((Xt.shape[1], L.shape[1]))
    step = 1.0 / np.linalg.norm(Xt, 2) ** 2
    for _ in range(iters):
        W -= step * (Xt.T @ (Xt @ W - L))
    return W


def test_pattern_route_examples(rng):
    X = rng.normal(size=(4, 2))
    pats = enumerate_patterns(X)
    sol = solve_dsm_multivariate(X, np.zeros((4, 2)), pats)
    assert np.all(sol.W_blocks == 0) and sol.objective == 0.0
    L = rng.normal(size=(2, 2))
    full = ActivationPattern(np.ones(2, dtype=bool), np.array([1.0, 0.0]))
    sol = solve_dsm_multivariate(np.eye(2), L, [full])
    assert np.allclose(sol.W_blocks[0], L)
    with pytest.raises(DimensionMismatch):
        solve_dsm_multivariate(X, np.zeros((3, 2)), pats)


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_pattern_route_matches_gradient_descent(seed):
    r = np.random.default_rng(seed)
    X, L = r.normal(size=(6, 2)), r.normal(size=(6, 2))
    pats = enumerate_patterns(X)
    sol = solve_dsm_multivariate(X, L, pats)
    assert sol.normal_residual <= 1e-8
    Xt, _ = stacked_design(X, pats)
    W = gradient_descent_ls(Xt, L)
    assert dsm_objective_nd(W.reshape(len(pats), 2, 2), X, L, pats) == pytest.approx(sol.objective, abs=1e-6)


def test_wedge_hand_example():
    F = build_wedge_features(np.array([[1.0, 0.0], [0.0, 2.0]]))
    assert F.column_index == [(0,), (1,)]
    assert F.K[0, 1] == pytest.approx(1.0)
    # a row wedged with itself contributes nothing
    assert F.K[0, 0] == 0.0 and F.K[1, 1] == 0.0


def test_wedge_errors_and_counts(rng):
    with pytest.raises(DimensionTooSmall):
        build_wedge_features(rng.normal(size=(4, 1)))
    X = rng.normal(size=(7, 3))
    F = build_wedge_features(X)
    assert F.c == column_count(7, 3) == len(list(itertools.combinations(range(7), 2)))
    assert build_wedge_features(rng.normal(size=(5, 2)), augment_bias=True).c == column_count(5, 2, True) == 10
    with pytest.raises(DimensionMismatch):
        predict_wedge_score(np.zeros((3, 2)), F, x_test=X)


def test_degenerate_columns_are_dropped():
    X = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
    with pytest.warns(RuntimeWarning):
        F = build_wedge_features(X)
    assert F.dropped == [(1,)] and F.c == 2


@given(st.integers(0, 10_000), st.floats(0.1, 10.0))
def test_generator_scaling_invariance(seed, c):
    X = np.random.default_rng(seed).normal(size=(5, 2))
    Y = X.copy()
    Y[2] *= c
    K1 = build_wedge_features(X).K
    K2 = build_wedge_features(Y).K
    keep = np.arange(5) != 2
    assert np.allclose(K1[keep, 2], K2[keep, 2], atol=1e-12)


@given(st.integers(0, 10_000))
def test_predictor_properties(seed):
    r = np.random.default_rng(seed)
    X = r.normal(size=(6, 2))
    F = build_wedge_features(X)
    Z = r.normal(size=(F.c, 2))
    assert np.array_equal(predict_wedge_score(Z, F, X), F.K @ Z)
    assert np.all(predict_wedge_score(Z, F, x_test=np.zeros((1, 2))) == 0)
    x = r.normal(size=2)
    assert np.allclose(F.features(x)[0], wedge_oracle(X, x), atol=1e-10)
    T = r.normal(size=(4, 2))
    assert np.allclose(predict_wedge_score(Z, F, x_test=2 * T), 2 * predict_wedge_score(Z, F, x_test=T), atol=1e-12)
    F1 = build_wedge_features(X, p_norm=1)
    assert np.allclose(F1.features(x)[0], wedge_oracle(X, x, p=1), atol=1e-10)


def test_group_lasso_fit_examples(rng):
    X = rng.normal(size=(8, 2))
    F = build_wedge_features(X)
    assert np.all(fit_wedge_dsm(F, np.zeros((8, 2)), 0.3) == 0)
    L = rng.normal(size=(8, 2))
    Z0 = fit_wedge_dsm(F, L, 0.0)
    assert np.allclose(F.K @ Z0, F.K @ least_squares_min_norm(F.K, L), atol=1e-12)
    Z, sol = fit_wedge_dsm(F, L, full_output=True)
    assert sol.kkt_residual <= 1e-8
    assert default_lambda(F, L) == pytest.approx(0.01 * np.linalg.norm(F.K.T @ L, axis=1).max())


def test_group_sparsity_grows_with_lambda(rng):
    X = rng.normal(size=(12, 2))
    L = rng.normal(size=(12, 2))
    F = build_wedge_features(X)
    top = 2 * np.linalg.norm(F.K.T @ L, axis=1).max()
    zeros = []
    for lam in np.linspace(0.02, 1.0, 8) * top:
        Z = fit_wedge_dsm(F, L, lam)
        zeros.append(int(np.sum(np.linalg.norm(Z, axis=1) == 0)))
    assert all(a <= b for a, b in zip(zeros, zeros[1:]))
    assert zeros[-1] == F.c


@settings(max_examples=20)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 6))
def test_wedge_model_nested_in_pattern_model(seed, n):
    r = np.random.default_rng(seed)
    X, L = r.normal(size=(n, 2)), r.normal(size=(n, 2))
    pats = enumerate_patterns(X)
    pattern_fit = solve_dsm_multivariate(X, L, pats)
    F = build_wedge_features(X)
    Z = fit_wedge_dsm(F, L, 0.0)
    wedge_res = 0.5 * float(np.sum((F.K @ Z - L) ** 2))
    assert pattern_fit.objective <= wedge_res + 1e-9
    # every wedge column is a realizable pattern applied to X nu_j
    by_mask = {p.mask.tobytes(): i for i, p in enumerate(pats)}
    W = np.zeros((len(pats), 2, 2))
    for j, nu in enumerate(F.normals):
        W[by_mask[pattern_mask(X, nu).tobytes()]] += np.outer(nu, Z[j])
    pred = sum((p.diag[:, None] * X) @ Wi for p, Wi in zip(pats, W))
    assert np.allclose(pred, F.K @ Z, atol=1e-10)
