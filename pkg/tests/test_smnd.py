import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scorekit.core import evaluate_network, make_dataset_nd
from scorekit.errors import DimensionTooLarge, UnboundedObjective
from scorekit.smnd import (
    ActivationPattern,
    Exhaustive,
    Sampled,
    cone_split,
    cone_violation,
    enumerate_patterns,
    network_sm_loss_nd,
    pattern_count_bound,
    pattern_mask,
    reconstruct_network_nd,
    sm_objective_nd,
    solve_sm_multivariate,
    stacked_design,
)


def sweep_masks(X, count=10_000):
    """Brute-force oracle: masks induced by evenly spaced unit vectors in the plane."""
    th = np.linspace(0, 2 * np.pi, count, endpoint=False)
    U = np.stack([np.cos(th), np.sin(th)], axis=1)
    return {tuple(row) for row in (X @ U.T >= 0).T}


def projected_gradient(X, patterns, iters=20_000):
    """Oracle: gradient descent on the pattern-grouped loss, steps projected onto range(G)."""
    Xt, Vt = stacked_design(X, patterns)
    G = Xt.T @ Xt
    U, s, _ = np.linalg.svd(G)
    Q = U[:, s > 1e-10 * s[0]]
    step = 1.0 / s[0]
    W = np.zeros_like(Vt)
    for _ in range(iters):
        W -= step * (Q @ (Q.T @ (G @ W + Vt)))
    d = X.shape[1]
    return sm_objective_nd(W.reshape(len(patterns), d, d), X, patterns)


def test_identity_patterns():
    pats = enumerate_patterns(np.eye(2))
    assert len(pats) == 4
    assert {p.bits for p in pats} == {"00", "01", "10", "11"}
    assert {tuple(p.mask) for p in pats} == sweep_masks(np.eye(2))


def test_one_dimensional_patterns():
    pats = enumerate_patterns(np.array([[1.0], [-1.0]]))
    assert [p.bits for p in pats] == ["01", "10"]


def test_exhaustive_limited_to_three_dims():
    with pytest.raises(DimensionTooLarge):
        enumerate_patterns(np.ones((3, 4)) + np.eye(3, 4))


@pytest.mark.parametrize("act", ["relu", "abs"])
@settings(max_examples=15)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 8))
def test_enumeration_properties(act, seed, n):
    X = np.random.default_rng(seed).normal(size=(n, 2))
    pats = enumerate_patterns(X, act)
    masks = {tuple(p.mask) for p in pats}
    assert len(masks) == len(pats)
    assert sweep_masks(X) <= masks
    sampled = {tuple(p.mask) for p in enumerate_patterns(X, act, Sampled(5000, seed))}
    assert sampled <= masks
    for p in pats:
        assert np.array_equal(pattern_mask(X, p.generator_u), p.mask)
        assert np.linalg.norm(p.generator_u) == pytest.approx(1.0)
    assert len(pats) <= pattern_count_bound(n, make_dataset_nd(X).rank_r)
    assert [p.bits for p in pats] == sorted(p.bits for p in pats)


def test_three_dim_enumeration_covers_samples(rng):
    X = rng.normal(size=(6, 3))
    pats = enumerate_patterns(X, method=Exhaustive())
    U = rng.standard_normal((50_000, 3))
    sampled = {tuple(row) for row in (X @ U.T >= 0).T}
    assert sampled <= {tuple(p.mask) for p in pats}
    assert len(pats) <= pattern_count_bound(6, 3)


def test_single_full_pattern_is_precision_matrix(rng):
    X = rng.normal(size=(10, 2))
    full = ActivationPattern(np.ones(10, dtype=bool), np.array([1.0, 0.0]))
    sol = solve_sm_multivariate(X, [full])
    assert np.allclose(-sol.W_blocks[0], 10 * np.linalg.inv(X.T @ X), atol=1e-12)
    assert sol.meta["bounded"]


def test_all_zero_patterns_give_zero(rng):
    X = rng.normal(size=(5, 2))
    empty = ActivationPattern(np.zeros(5, dtype=bool), np.array([1.0, 0.0]))
    sol = solve_sm_multivariate(X, [empty])
    assert np.all(sol.W_blocks == 0) and sol.objective == 0.0


def test_exhaustive_identity_is_unbounded():
    pats = enumerate_patterns(np.eye(2))
    with pytest.raises(UnboundedObjective):
        solve_sm_multivariate(np.eye(2), pats)
    sol = solve_sm_multivariate(np.eye(2), pats, require_bounded=False)
    assert not sol.meta["bounded"]
    assert sol.objective == pytest.approx(projected_gradient(np.eye(2), pats), abs=1e-6)


@pytest.mark.parametrize("act", ["relu", "abs"])
@settings(max_examples=8)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 8))
def test_closed_form_matches_projected_gradient(act, seed, n):
    X = np.random.default_rng(seed).normal(size=(n, 2))
    pats = enumerate_patterns(X, act)
    sol = solve_sm_multivariate(X, pats, require_bounded=False)
    assert sm_objective_nd(sol.W_blocks, X, pats) == pytest.approx(sol.objective, abs=1e-10 * max(1, abs(sol.objective)))
    assert projected_gradient(X, pats) == pytest.approx(sol.objective, abs=1e-6)


def test_cone_split_examples(rng):
    X = rng.normal(size=(4, 2))
    pats = enumerate_patterns(X)
    pat = max(pats, key=lambda p: np.min(np.abs(X @ p.generator_u)))
    g = pat.generator_u
    up, un = cone_split(g, pat, X)
    assert np.array_equal(up, g) and np.all(un == 0)
    up, un = cone_split(-g, pat, X)
    assert np.all(up == 0) and np.array_equal(un, g)


@settings(max_examples=25)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 6))
def test_cone_split_random(seed, n):
    r = np.random.default_rng(seed)
    X = r.normal(size=(n, 2))
    u = r.normal(size=2)
    for pat in enumerate_patterns(X):
        up, un = cone_split(u, pat, X)
        assert np.allclose(up - un, u, atol=1e-8)
        assert cone_violation(up, pat, X) <= 1e-8 and cone_violation(un, pat, X) <= 1e-8


def test_reconstruction_examples(rng):
    X = rng.normal(size=(5, 2))
    empty = ActivationPattern(np.zeros(5, dtype=bool), np.array([1.0, 0.0]))
    net = reconstruct_network_nd(solve_sm_multivariate(X, [empty]), X)
    assert net.m == 0 and np.all(evaluate_network(net, X) == 0)
    pats = enumerate_patterns(np.eye(2))
    sol = solve_sm_multivariate(np.eye(2), pats, require_bounded=False)
    net = reconstruct_network_nd(sol, np.eye(2))
    assert network_sm_loss_nd(net, np.eye(2)) == pytest.approx(sol.objective, abs=1e-6)
    ranks = [np.linalg.matrix_rank(W) for W in sol.W_blocks]
    assert net.m == 2 * sum(ranks)


@pytest.mark.parametrize("act", ["relu", "abs"])
@settings(max_examples=10)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 7))
def test_reconstruction_objective_and_forward_map(act, seed, n):
    X = np.random.default_rng(seed).normal(size=(n, 2))
    pats = enumerate_patterns(X, act)
    sol = solve_sm_multivariate(X, pats, require_bounded=False)
    net = reconstruct_network_nd(sol, X)
    assert network_sm_loss_nd(net, X) == pytest.approx(sol.objective, abs=1e-6)
    pred = sum((p.diag[:, None] * X) @ W for p, W in zip(pats, sol.W_blocks))
    assert np.allclose(evaluate_network(net, X), pred, atol=1e-6)
    assert net.m <= 2 * len(pats) * 2


def test_pattern_round_trip(rng):
    p = enumerate_patterns(rng.normal(size=(4, 2)), "abs")[0]
    q = ActivationPattern.from_dict(p.to_dict())
    assert q.bits == p.bits and q.activation == "abs" and np.array_equal(q.generator_u, p.generator_u)
