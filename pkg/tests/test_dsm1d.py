import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scorekit.baseline import loss_dsm
from scorekit.core import evaluate_network, make_dataset_1d
from scorekit.dsm1d import build_dsm_program, fit_dsm, predict_dsm_score, reconstruct_dsm_network, solve_dsm
from scorekit.errors import BadBeta, BadEpsilon, DimensionMismatch
from scorekit.prox import Status


def instance(seed, n, eps=0.5):
    r = np.random.default_rng(seed)
    clean = r.normal(size=n)
    delta = r.standard_normal(n)
    return clean + eps * delta, -delta / eps


def test_constant_labels_give_zero():
    x = np.array([0.0, 0.4, 1.3, 2.0])
    for act in ("relu", "abs"):
        prog = build_dsm_program(x, np.full(4, 3.0), 0.1, act, 0.2)
        assert np.all(prog.target == 0)
        assert np.all(solve_dsm(prog).y_star == 0)


def test_two_point_features():
    prog = build_dsm_program([0.0, 1.0], [1.0, -1.0], 1.0, "relu", 1.0)
    assert np.array_equal(prog.raw_features[:, :2], [[0.0, 0.0], [1.0, 0.0]])
    assert np.array_equal(prog.raw_features[:, 2:], [[0.0, 1.0], [0.0, 0.0]])
    assert np.abs(prog.A.sum(axis=0)).max() == 0
    assert prog.k == 4 and build_dsm_program([0.0, 1.0], [1.0, -1.0], 1.0, "abs", 1.0).k == 2


def test_label_scaling():
    delta = np.random.default_rng(0).standard_normal(5)
    prog = build_dsm_program(np.arange(5.0), delta / 0.1, 0.1, "relu", 1.0)
    assert np.allclose(prog.raw_labels, 10 * delta)
    assert np.allclose(prog.target, 10 * (delta - delta.mean()))


def test_errors():
    with pytest.raises(BadEpsilon):
        build_dsm_program([0.0, 1.0], [0.0, 0.0], 0.0)
    with pytest.raises(BadBeta):
        build_dsm_program([0.0, 1.0], [0.0, 0.0], 1.0, beta=0.0)
    with pytest.raises(DimensionMismatch):
        build_dsm_program([0.0, 1.0], [0.0], 1.0)
    prog = build_dsm_program([0.0, 1.0], [0.0, 1.0], 1.0)
    with pytest.raises(DimensionMismatch):
        reconstruct_dsm_network(np.zeros(3), prog)


def test_zero_solution_predicts_mean():
    x, l = instance(1, 10)
    prog = build_dsm_program(x, l, 0.5, "relu", 1.0)
    p = reconstruct_dsm_network(np.zeros(prog.k), prog)
    grid = np.linspace(-4, 4, 9)
    assert np.allclose(evaluate_network(p, grid), l.mean())
    assert np.allclose(predict_dsm_score(np.zeros(prog.k), prog, grid), l.mean())
    big = np.abs(prog.A.T @ prog.target).max() * 1.001
    fit = fit_dsm(x, l, 0.5, "relu", big)
    assert np.all(fit.y_star == 0) and np.allclose(fit.score(grid), l.mean())


@pytest.mark.parametrize("act", ["relu", "abs"])
@settings(max_examples=20)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 30), beta=st.floats(0.01, 5.0))
def test_objective_equality_and_kkt(act, seed, n, beta):
    x, l = instance(seed, n)
    fit = fit_dsm(x, l, 0.5, act, beta)
    assert fit.solution.status is Status.CONVERGED
    assert fit.solution.kkt_residual <= 1e-8
    assert loss_dsm(fit.params, x, l, beta) == pytest.approx(fit.objective, abs=1e-6)
    grid = np.linspace(x.min() - 1, x.max() + 1, 57)
    assert np.allclose(fit.score(grid), predict_dsm_score(fit.y_star, fit.program, grid), atol=1e-8)


def test_far_field_slope():
    x, l = instance(4, 15)
    fit = fit_dsm(x, l, 0.5, "relu", 0.3)
    y = fit.y_star
    a, b = x.max() + 1.0, x.max() + 2.0
    s = predict_dsm_score(y, fit.program, [a, b])
    assert s[1] - s[0] == pytest.approx(-y[:15].sum(), abs=1e-10)


def test_label_shift_changes_only_intercept():
    x, l = instance(5, 12)
    f1 = fit_dsm(x, l, 0.5, "abs", 0.2)
    f2 = fit_dsm(x, l + 7.0, 0.5, "abs", 0.2)
    assert np.allclose(f1.y_star, f2.y_star, atol=1e-10)
    assert f2.params.b2[0] - f1.params.b2[0] == pytest.approx(7.0)


def test_accepts_dataset_in_sorted_order():
    x, l = instance(6, 8)
    order = np.argsort(x)
    data = make_dataset_1d(x)
    a = fit_dsm(data, l[order], 0.5, "relu", 0.4)
    b = fit_dsm(x, l, 0.5, "relu", 0.4)
    assert a.objective == pytest.approx(b.objective, abs=1e-10)
