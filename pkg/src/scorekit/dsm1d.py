"""Univariate denoising score matching as a lasso.

With noisy inputs x_i and labels l_i (the regression targets of the DSM loss),
a two-layer ReLU or absolute-value network with weight decay beta has the
same optimum as

    min_y  1/2 ||A y + l_bar||^2 + beta ||y||_1

where A holds the mean-centred hinge features at the data points and l_bar is
the mean-centred label vector. Output weights of the reconstructed network are
alpha_j = -sign(y_j) sqrt(|y_j|), so the predictor is

    s(x) = -sum_j y_j phi_j(x) + b0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import TwoLayerParams, evaluate_network, sign
from .errors import BadBeta, BadEpsilon, DimensionMismatch
from .prox import DEFAULT_MAX_ITERS, DEFAULT_TOL, LassoSolution, lasso_objective, solve_lasso


@dataclass(frozen=True)
class DSMProgram1D:
    A: np.ndarray
    target: np.ndarray
    variant: str
    beta: float
    raw_labels: np.ndarray
    epsilon: float
    points: np.ndarray = field(repr=False)
    raw_features: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def k(self) -> int:
        return self.A.shape[1]

    def objective(self, y) -> float:
        return lasso_objective(self.A, self.target, self.beta, y)


def dsm_features(points, x_eval, activation):
    """Uncentred hinge features phi_j(x) anchored at the points, shape (len(x_eval), k)."""
    x = np.asarray(points, dtype=float)
    z = np.asarray(x_eval, dtype=float).reshape(-1)
    diff = z[:, None] - x[None, :]
    if activation == "relu":
        return np.hstack([np.maximum(diff, 0.0), np.maximum(-diff, 0.0)])
    return np.abs(diff)


def build_dsm_program(noisy_points, labels, epsilon: float, activation="relu", beta=1.0) -> DSMProgram1D:
    """Assemble the lasso for already-computed labels (l_i = delta_i / epsilon).

    noisy_points may be a Dataset1D (whose points are sorted, so labels must be
    given in sorted order) or a plain array, whose order is kept as is.
    """
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise BadEpsilon(f"epsilon must be positive, got {epsilon}")
    if not (np.isfinite(beta) and beta > 0):
        raise BadBeta(f"beta must be positive, got {beta}")
    if activation not in ("relu", "abs"):
        raise ValueError(f"unknown activation {activation!r}")
    x = np.asarray(getattr(noisy_points, "points", noisy_points), dtype=float).ravel()
    if x.size < 1 or not np.all(np.isfinite(x)):
        raise DimensionMismatch("need at least one finite point")
    l = np.asarray(labels, dtype=float).ravel()
    if l.size != x.size:
        raise DimensionMismatch(f"{x.size} points but {l.size} labels")
    feats = dsm_features(x, x, activation)
    A = feats - feats.mean(axis=0, keepdims=True)
    target = l - l.mean()
    return DSMProgram1D(A, target, activation, float(beta), l, float(epsilon), x, feats)


def solve_dsm(prog: DSMProgram1D, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS) -> LassoSolution:
    return solve_lasso(prog.A, prog.target, prog.beta, tol=tol, max_iters=max_iters)


def _check_y(y_star, prog):
    y = np.asarray(y_star, dtype=float).ravel()
    if y.size != prog.k:
        raise DimensionMismatch(f"program has {prog.k} coordinates, got y of length {y.size}")
    return y


def dsm_intercept(y_star, prog: DSMProgram1D) -> float:
    y = _check_y(y_star, prog)
    return float(np.mean(prog.raw_features @ y + prog.raw_labels))


def reconstruct_dsm_network(y_star, prog: DSMProgram1D) -> TwoLayerParams:
    """Two-layer network whose DSM loss equals the lasso value at y_star."""
    y = _check_y(y_star, prog)
    x = prog.points
    n = x.size
    mag = np.sqrt(np.abs(y))
    if prog.variant == "relu":
        w = np.concatenate([mag[:n], -mag[n:]])
        xs = np.concatenate([x, x])
    else:
        w = mag
        xs = x
    b = -w * xs
    alpha = -sign(y) * mag
    b0 = dsm_intercept(y, prog)
    params = TwoLayerParams(w[:, None], b, alpha[None, :], [b0], [[0.0]], prog.variant)
    params.meta.update(objective="dsm", beta=prog.beta)
    return params


def predict_dsm_score(y_star, prog: DSMProgram1D, x_test) -> np.ndarray:
    y = _check_y(y_star, prog)
    return -dsm_features(prog.points, x_test, prog.variant) @ y + dsm_intercept(y, prog)


@dataclass
class DSMFit:
    program: DSMProgram1D
    solution: LassoSolution
    params: TwoLayerParams

    @property
    def y_star(self):
        return self.solution.y_star

    @property
    def objective(self) -> float:
        return self.solution.objective

    def score(self, x):
        return evaluate_network(self.params, x)


def fit_dsm(noisy_points, labels, epsilon, activation="relu", beta=1.0,
            tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS) -> DSMFit:
    prog = build_dsm_program(noisy_points, labels, epsilon, activation, beta)
    sol = solve_dsm(prog, tol=tol, max_iters=max_iters)
    return DSMFit(prog, sol, reconstruct_dsm_network(sol.y_star, prog))
