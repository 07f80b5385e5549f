"""Multivariate denoising score matching.

Two routes are provided. The pattern route fits sum_i D_i X W_i to the label
matrix L by minimum-norm least squares. The wedge route replaces the pattern
enumeration with gated-wedge features

    K_ij = (x_i ^ x_j1 ^ ... ^ x_j(d-1))_+ / || x_j1 ^ ... ^ x_j(d-1) ||_p

(for d = 2: det[x_i; x_j]_+ / ||x_j||_p) and solves the group lasso
||K Z - L||_F^2 + lam * sum_j ||Z_j||_2. The wedge of d vectors in R^d is the
determinant of the stacked rows, so each column is (x . nu_j)_+ / ||nu_j||_p
with nu_j the generalized cross product of the generator rows.

Wedge features are positively homogeneous in x. ``augment_bias`` lifts the
data to (x, 1) first, which turns each feature into a ReLU of an affine
function (a hyperplane through d data points) and lets the predictor model
scores that do not vanish at the origin.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import DatasetND, make_dataset_nd
from .errors import DimensionMismatch, DimensionTooSmall
from .prox import DEFAULT_MAX_ITERS, DEFAULT_TOL, least_squares_min_norm, solve_group_lasso
from .smnd import MultiSMSolution, stacked_design

NORMAL_EQ_TOL = 1e-8
DEFAULT_LAMBDA_FRACTION = 0.01


@dataclass
class MultiDSMSolution(MultiSMSolution):
    normal_residual: float = 0.0


def _as_dataset(data):
    return data if isinstance(data, DatasetND) else make_dataset_nd(data)


def _labels(L, n):
    L = np.asarray(L, dtype=float)
    if L.ndim == 1:
        L = L[:, None]
    if L.shape[0] != n:
        raise DimensionMismatch(f"{n} data rows but {L.shape[0]} label rows")
    return L


def dsm_objective_nd(W_blocks, X, L, patterns) -> float:
    X = np.asarray(X, dtype=float)
    S = sum((p.diag[:, None] * X) @ Wi for p, Wi in zip(patterns, W_blocks)) if len(patterns) else 0.0
    R = S - L
    return 0.5 * float(np.sum(R * R))


def solve_dsm_multivariate(data, L, patterns, rtol=1e-10) -> MultiDSMSolution:
    """Minimum-norm least-squares fit of the stacked pattern design to L."""
    data = _as_dataset(data)
    X = np.asarray(data.X, dtype=float)
    n, d = X.shape
    L = _labels(L, n)
    if L.shape[1] != d:
        raise DimensionMismatch(f"labels have {L.shape[1]} columns, data has d={d}")
    P = len(patterns)
    if P == 0:
        return MultiDSMSolution(np.zeros((0, d, d)), 0.5 * float(np.sum(L * L)), [], {}, 0.0)
    Xt, _ = stacked_design(X, patterns)
    W = least_squares_min_norm(Xt, L, rtol=rtol)
    normal = float(np.linalg.norm(Xt.T @ (Xt @ W - L)))
    blocks = W.reshape(P, d, d)
    obj = dsm_objective_nd(blocks, X, L, patterns)
    return MultiDSMSolution(blocks, obj, list(patterns), {"normal_residual": normal}, normal)


def _generalized_cross(M):
    """nu with nu . x = det([x; M]) for rows M of shape (d-1, d)."""
    d = M.shape[1]
    if d == 2:
        return np.array([M[0, 1], -M[0, 0]])
    if d == 3:
        return np.cross(M[0], M[1])
    cols = np.arange(d)
    return np.array([(-1) ** k * np.linalg.det(M[:, cols != k]) for k in range(d)])


@dataclass(frozen=True)
class WedgeFeatureMap:
    K: np.ndarray
    column_index: list
    p_norm: int
    normals: np.ndarray = field(repr=False)
    dropped: list = field(default_factory=list)
    augment_bias: bool = False

    @property
    def c(self) -> int:
        return self.K.shape[1]

    def lift(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.augment_bias:
            x = np.hstack([x, np.ones((x.shape[0], 1))])
        return x

    def features(self, x_test) -> np.ndarray:
        Xl = self.lift(x_test)
        if Xl.shape[1] != self.normals.shape[1]:
            raise DimensionMismatch(f"inputs have dimension {Xl.shape[1]}, features expect {self.normals.shape[1]}")
        return np.maximum(Xl @ self.normals.T, 0.0)


def build_wedge_features(data, p_norm=2, augment_bias=False, anchors=None) -> WedgeFeatureMap:
    """Gated-wedge feature matrix over all (d-1)-subsets of (possibly lifted) rows.

    By default the generator subsets are drawn from the data rows themselves.
    ``anchors`` supplies a separate set of generator rows, so that more
    training rows can be fitted without growing the number of columns.
    """
    data = _as_dataset(data)
    X = np.asarray(data.X, dtype=float)
    if p_norm not in (1, 2):
        raise ValueError("p_norm must be 1 or 2")
    G = X if anchors is None else np.atleast_2d(np.asarray(anchors, dtype=float))
    if G.shape[1] != X.shape[1]:
        raise DimensionMismatch(f"anchors have dimension {G.shape[1]}, data has {X.shape[1]}")
    if augment_bias:
        X = np.hstack([X, np.ones((X.shape[0], 1))])
        G = np.hstack([G, np.ones((G.shape[0], 1))])
    n, d = G.shape
    if d < 2:
        raise DimensionTooSmall(f"wedge features need d >= 2, got d={d}")
    normals, index, dropped = [], [], []
    scale = max(1.0, float(np.abs(X).max()))
    for combo in itertools.combinations(range(n), d - 1):
        nu = _generalized_cross(G[list(combo)])
        nrm = float(np.linalg.norm(nu, ord=p_norm))
        if nrm <= 1e-12 * scale ** (d - 1):
            dropped.append(combo)
            continue
        normals.append(nu / nrm)
        index.append(combo)
    if dropped:
        warnings.warn(f"dropped {len(dropped)} degenerate wedge columns", RuntimeWarning, stacklevel=2)
    N = np.array(normals).reshape(-1, d)
    K = np.maximum(X @ N.T, 0.0)
    return WedgeFeatureMap(K, index, p_norm, N, dropped, augment_bias)


def default_lambda(features: WedgeFeatureMap, L) -> float:
    """0.01 * max_j ||K_j^T L||_2."""
    L = _labels(L, features.K.shape[0])
    return DEFAULT_LAMBDA_FRACTION * float(np.linalg.norm(features.K.T @ L, axis=1).max(initial=0.0))


def fit_wedge_dsm(features: WedgeFeatureMap, L, lam=None, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS,
                  full_output=False):
    """Group-lasso fit of the wedge features to the label matrix.

    lam=None uses default_lambda; lam=0 returns the minimum-norm least-squares Z.
    """
    L = _labels(L, features.K.shape[0])
    if lam is None:
        lam = default_lambda(features, L)
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if lam == 0:
        Z = least_squares_min_norm(features.K, L)
        return (Z, None) if full_output else Z
    sol = solve_group_lasso(features.K, L, lam, tol=tol, max_iters=max_iters, full_output=True)
    return (sol.Z, sol) if full_output else sol.Z


def predict_wedge_score(Z, features: WedgeFeatureMap, data=None, x_test=None) -> np.ndarray:
    """f(x) = sum_j Z_j (x . nu_j)_+ / ||nu_j||_p, evaluated row-wise."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.shape[0] != features.c:
        raise DimensionMismatch(f"Z has {Z.shape[0]} rows, features have {features.c} columns")
    if x_test is None:
        if data is None:
            raise DimensionMismatch("need x_test or data")
        x_test = _as_dataset(data).X
    return features.features(x_test) @ Z


def column_count(n, d, augment_bias=False) -> int:
    dd = d + 1 if augment_bias else d
    return math.comb(n, dd - 1)
