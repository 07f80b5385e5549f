import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scorekit.baseline import loss_sm
from scorekit.core import ArchitectureConfig, evaluate_network, make_dataset_1d
from scorekit.errors import BetaOutOfRegime, BetaTooSmall, DimensionMismatch, NotApplicable, TOutOfRange
from scorekit.prox import Status
from scorekit.sm1d import (
    MIN_BETA,
    build_sm_program,
    closed_form_score,
    compute_beta_thresholds,
    fit_sm,
    fitted_t,
    reconstruct_network,
    two_spike_solution,
)

VARIANTS = [("relu", False), ("abs", False), ("relu", True), ("abs", True)]


def random_data(seed, n):
    return make_dataset_1d(np.random.default_rng(seed).normal(size=n))


def b_inf(data, act, skip):
    prog = build_sm_program(data, ArchitectureConfig(act, skip, 1.0), enforce_beta=False)
    return float(np.abs(prog.b_lin).max()), prog


def test_abs_program_two_points():
    prog = build_sm_program(make_dataset_1d([0.0, 1.0]), ArchitectureConfig("abs", False, 1.0))
    Abar = np.array([[-0.5, 0.5], [0.5, -0.5]])
    assert np.allclose(prog.A, np.hstack([Abar, Abar]))
    assert np.allclose(prog.b_lin, [2.0, 0.0, 0.0, -2.0])
    assert prog.c_const == 0.0


def test_relu_program_two_points():
    prog = build_sm_program(make_dataset_1d([0.0, 1.0]), ArchitectureConfig("relu", False, 1.0))
    assert prog.A.shape == (2, 8)
    assert np.abs(prog.b_lin).max() == 2.0


@pytest.mark.parametrize("act,skip", VARIANTS)
def test_program_shapes_and_centering(act, skip):
    data = random_data(3, 9)
    prog = build_sm_program(data, ArchitectureConfig(act, skip, 3.0))
    k = {"relu_noskip": 36, "abs_noskip": 18, "relu_skip": 18, "abs_skip": 18}[prog.variant]
    assert prog.A.shape == (9, k)
    # centred features (and their projection) have zero column sums
    assert np.abs(prog.A.sum(axis=0)).max() <= 1e-12
    if skip:
        assert np.abs(data.centered @ prog.A).max() <= 1e-10
        assert prog.c_const == pytest.approx(-data.n / (2 * data.v))


@pytest.mark.parametrize("act,skip", VARIANTS)
def test_beta_too_small(act, skip):
    data = random_data(0, 5)
    lo = MIN_BETA[ArchitectureConfig(act, skip).variant]
    with pytest.raises(BetaTooSmall):
        build_sm_program(data, ArchitectureConfig(act, skip, lo - 0.5))


def test_thresholds_examples():
    th = compute_beta_thresholds(make_dataset_1d([-1.0, 1.0]), ArchitectureConfig("relu", False, 1.5))
    assert th.b_inf == 2.0
    sym = make_dataset_1d([-2.0, -0.5, 0.5, 2.0])
    th = compute_beta_thresholds(sym, ArchitectureConfig("relu", False, 2.0))
    assert th.beta_low < th.b_inf
    big = make_dataset_1d(np.random.default_rng(0).normal(size=500))
    assert compute_beta_thresholds(big, ArchitectureConfig("relu", False, 10.0)).b_inf == 500.0
    with pytest.raises(NotApplicable):
        compute_beta_thresholds(sym, ArchitectureConfig("abs", True, 3.0))


@given(st.integers(0, 10_000), st.integers(2, 40))
def test_b_inf_equals_n_for_relu(seed, n):
    # the >=-indicator column of the smallest point covers all n points
    data = random_data(seed, n)
    assert b_inf(data, "relu", False)[0] == n


def test_closed_form_two_points():
    data = make_dataset_1d([-1.0, 1.0])
    cfg = ArchitectureConfig("relu", False, 1.5)
    sc = closed_form_score(data, cfg, 0.0)
    assert sc.slopes[1] == pytest.approx(-0.25)
    assert sc(np.array([0.0]))[0] == pytest.approx(0.0, abs=1e-15)
    assert sc(np.array([0.5]))[0] == pytest.approx(-0.125)
    # numerically solved program, reconstructed and evaluated, agrees
    fit = fit_sm(data, cfg)
    assert evaluate_network(fit.params, [0.5])[0] == pytest.approx(-0.125, abs=1e-6)
    assert sc.continuity_gap() <= 1e-10


def test_closed_form_regimes(rng):
    data = random_data(2, 10)
    th = compute_beta_thresholds(data, ArchitectureConfig("relu", False, 5.0))
    zero = closed_form_score(data, ArchitectureConfig("relu", False, th.b_inf + 1))
    assert np.all(zero(rng.normal(size=5)) == 0)
    with pytest.raises(BetaOutOfRegime):
        closed_form_score(data, ArchitectureConfig("relu", False, th.beta_low * 0.5 + 0.5))
    beta = 0.5 * (th.beta_low + th.b_inf)
    half = (data.n - beta) / (2 * data.n * data.v)
    with pytest.raises(TOutOfRange):
        closed_form_score(data, ArchitectureConfig("relu", False, beta), t=1.1 * half)
    skip = closed_form_score(data, ArchitectureConfig("abs", True, 50.0))
    x = np.linspace(-2, 2, 11)
    assert np.allclose(skip(x), -(x - data.mu) / data.v, atol=1e-12)


def test_reconstruct_examples():
    data = make_dataset_1d([0.0, 1.0, 3.0])
    for act, skip in [("relu", False), ("abs", False)]:
        cfg = ArchitectureConfig(act, skip, 2.0)
        k = build_sm_program(data, cfg).k
        p = reconstruct_network(np.zeros(k), data, cfg)
        assert np.all(p.W1 == 0) and np.all(p.W2 == 0) and p.b2[0] == 0
        assert np.all(evaluate_network(p, np.linspace(-5, 5, 7)) == 0)
    y = np.zeros(6)
    y[0] = 4.0
    p = reconstruct_network(y, data, ArchitectureConfig("abs", False, 2.0))
    assert p.W1[0, 0] == 2.0 and p.W2[0, 0] == 2.0 and p.b1[0] == -2.0 * data.points[0]
    for act in ("relu", "abs"):
        p = reconstruct_network(np.zeros(6), data, ArchitectureConfig(act, True, 3.0))
        assert p.V[0, 0] == pytest.approx(-1 / data.v)
        assert p.b2[0] == pytest.approx(data.mu / data.v)
    with pytest.raises(DimensionMismatch):
        reconstruct_network(np.zeros(5), data, ArchitectureConfig("abs", False, 2.0))


@pytest.mark.parametrize("act,skip", VARIANTS)
@settings(max_examples=15)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 25), frac=st.floats(0.0, 1.2))
def test_reconstruction_objective_equality(act, skip, seed, n, frac):
    data = random_data(seed, n)
    binf, prog = b_inf(data, act, skip)
    lo = MIN_BETA[prog.variant]
    beta = lo + frac * max(binf - lo, 1.0)
    fit = fit_sm(data, ArchitectureConfig(act, skip, beta))
    assert fit.solution.status is Status.CONVERGED
    assert loss_sm(fit.params, data, beta) == pytest.approx(fit.objective, abs=1e-6)


@settings(max_examples=15)
@given(seed=st.integers(0, 10_000), n=st.integers(3, 30), frac=st.floats(0.05, 1.0))
def test_interior_slope_and_monotone(seed, n, frac):
    data = random_data(seed, n)
    cfg0 = ArchitectureConfig("relu", False, 1.0)
    th = compute_beta_thresholds(data, cfg0)
    lo = max(th.beta_low, 1.0)
    beta = lo + frac * (th.b_inf - lo)
    cfg = ArchitectureConfig("relu", False, beta)
    fit = fit_sm(data, cfg)
    x = np.linspace(data.points[0], data.points[-1], 101)
    s = fit.score(x)
    slope = (beta - n) / (n * data.v)
    assert np.allclose(s, slope * (x - data.mu), atol=1e-6)
    t = fitted_t(fit.y_star, data, cfg)
    assert abs(t) <= (n - beta) / (2 * n * data.v) + 1e-6
    wide = np.linspace(data.points[0] - 3, data.points[-1] + 3, 301)
    assert np.all(np.diff(fit.score(wide)) <= 1e-9)
    assert np.allclose(fit.score(wide), closed_form_score(data, cfg, t)(wide), atol=1e-6)


def test_two_spike_solution_is_optimal():
    data = random_data(0, 500)
    cfg = ArchitectureConfig("relu", False, 499.0)
    fit = fit_sm(data, cfg)
    y = two_spike_solution(data, cfg)
    assert np.flatnonzero(fit.y_star).tolist() == [0, 1499]
    assert np.allclose(fit.y_star, y, atol=1e-10)
    assert fit.objective == pytest.approx(-0.000973346, abs=1e-8)


@pytest.mark.parametrize("act,skip", VARIANTS)
def test_zero_threshold(act, skip):
    data = random_data(7, 12)
    binf, prog = b_inf(data, act, skip)
    beta = 1.01 * binf if prog.variant != "relu_skip" else 0.505 * binf
    fit = fit_sm(data, ArchitectureConfig(act, skip, max(beta, MIN_BETA[prog.variant])))
    assert np.abs(fit.y_star).max() <= 1e-8
