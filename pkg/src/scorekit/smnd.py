"""Multivariate score matching over hyperplane-arrangement patterns.

Without bias, skip or weight decay, the score-matching loss of a two-layer
network s(x) = sum_j v_j act(u_j^T x) equals, after grouping neurons by the
activation pattern D_i they induce on the data X,

    1/2 || sum_i D_i X W_i ||_F^2 + sum_i tr(D_i) tr(W_i),     W_i = sum_k u_ik v_ik^T.

This is an unconstrained quadratic in the stacked W, minimized by
W = -(Xt^T Xt)^+ Vt with Xt = [D_1 X, ..., D_P X] and Vt the stacked tr(D_i) I.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DatasetND, TwoLayerParams, activate, activation_slope, make_dataset_nd
from .errors import DimensionMismatch, DimensionTooLarge, SplitInfeasible, UnboundedObjective
from .prox import least_squares_min_norm

MASK_TOL = 1e-12
RANGE_TOL = 1e-8
SPLIT_TOL = 1e-8
DYKSTRA_SWEEPS = 10_000


@dataclass(frozen=True)
class ActivationPattern:
    """Diagonal of D (as booleans) plus a unit generator u inducing it.

    For the absolute-value activation the diagonal of D is sign(X u), stored
    here as mask = (X u >= 0); ``diag`` recovers the numeric entries.
    """

    mask: np.ndarray
    generator_u: np.ndarray
    activation: str = "relu"

    @property
    def bits(self) -> str:
        return "".join("1" if b else "0" for b in self.mask)

    @property
    def diag(self) -> np.ndarray:
        m = self.mask.astype(float)
        return m if self.activation == "relu" else 2.0 * m - 1.0

    @property
    def trace(self) -> float:
        return float(self.diag.sum())

    def to_dict(self) -> dict:
        return {"mask": self.bits, "generator_u": self.generator_u.tolist(), "activation": self.activation}

    @classmethod
    def from_dict(cls, d) -> "ActivationPattern":
        mask = np.array([c == "1" for c in d["mask"]])
        return cls(mask, np.asarray(d["generator_u"], dtype=float), d.get("activation", "relu"))


@dataclass(frozen=True)
class Exhaustive:
    pass


@dataclass(frozen=True)
class Sampled:
    count: int = 10_000
    seed: int = 0


def pattern_mask(X, u, tol=MASK_TOL) -> np.ndarray:
    """1{X u >= 0}, with values within tol * ||x_i|| ||u|| of zero counted as zero."""
    X = np.asarray(X, dtype=float)
    z = X @ u
    scale = np.linalg.norm(X, axis=1) * np.linalg.norm(u)
    return z >= -tol * np.maximum(scale, 1e-300)


def pattern_count_bound(n, r) -> float:
    """Upper bound 2 r (e (n - 1) / r)^r on the number of patterns."""
    if r == 0:
        return 1.0
    return 2.0 * r * (math.e * (n - 1) / r) ** r


def _unit(u):
    return u / np.linalg.norm(u)


def _sweep_2d(Y):
    """Generators covering every pattern of rows Y (n x 2): boundary normals plus midpoints."""
    nz = np.linalg.norm(Y, axis=1) > 0
    if not np.any(nz):
        return [np.array([1.0, 0.0])]
    ang = np.arctan2(Y[nz, 1], Y[nz, 0])
    bnd = np.concatenate([ang + np.pi / 2, ang - np.pi / 2]) % (2 * np.pi)
    bnd = np.unique(bnd)
    mids = (bnd + np.diff(np.append(bnd, bnd[0] + 2 * np.pi)) / 2) % (2 * np.pi)
    theta = np.concatenate([bnd, mids])
    gens = [np.array([np.cos(t), np.sin(t)]) for t in theta]
    # exact normals avoid rounding in the boundary directions
    for y in Y[nz]:
        p = _unit(np.array([-y[1], y[0]]))
        gens.extend([p, -p])
    return gens


def _sweep_3d(Y):
    """Generators for rank-3 rows: arrangement vertices, each perturbed into its neighbourhood."""
    nz = np.flatnonzero(np.linalg.norm(Y, axis=1) > 0)
    gens = []
    for a_pos, a in enumerate(nz):
        for b in nz[a_pos + 1:]:
            c = np.cross(Y[a], Y[b])
            nc = np.linalg.norm(c)
            if nc <= MASK_TOL * np.linalg.norm(Y[a]) * np.linalg.norm(Y[b]):
                continue
            for v in (c / nc, -c / nc):
                gens.extend(_vertex_neighbourhood(Y, v))
    return gens


def _vertex_neighbourhood(Y, v):
    norms = np.maximum(np.linalg.norm(Y, axis=1), 1e-300)
    dots = Y @ v
    tied = np.abs(dots) <= 1e-9 * norms
    free = ~tied & (norms > 1e-300)
    # tangent-plane basis at v
    T = np.linalg.svd(v[None, :])[2][1:].T
    margin = np.min(np.abs(dots[free]) / norms[free]) if np.any(free) else 1.0
    delta = 0.5 * margin
    out = [v]
    for w in _sweep_2d(Y[tied] @ T):
        out.append(_unit(v + delta * (T @ w)))
    return out


def enumerate_patterns(data, activation="relu", method=None) -> list:
    """Distinct activation patterns of the rows of X, sorted by mask bitstring."""
    if not isinstance(data, DatasetND):
        data = make_dataset_nd(data)
    method = method or Exhaustive()
    X = np.asarray(data.X, dtype=float)
    n, d = X.shape
    if isinstance(method, Sampled):
        rng = np.random.default_rng(method.seed)
        gens = [_unit(g) for g in rng.standard_normal((method.count, d)) if np.linalg.norm(g) > 0]
    else:
        if d > 3:
            raise DimensionTooLarge(f"exhaustive enumeration supports d <= 3, got d={d}")
        gens = _exhaustive_generators(X)
    # keep, per mask, the witness farthest from every boundary
    norms = np.linalg.norm(X, axis=1)
    nz = norms > 0
    found = {}
    for u in gens:
        mask = pattern_mask(X, u)
        key = mask.tobytes()
        margin = float(np.min(np.abs(X[nz] @ u) / norms[nz])) if np.any(nz) else 0.0
        if key not in found or margin > found[key][0]:
            found[key] = (margin, ActivationPattern(mask, u, activation))
    return sorted((p for _, p in found.values()), key=lambda p: p.bits)


def _exhaustive_generators(X):
    n, d = X.shape
    _, s, Vt = np.linalg.svd(X, full_matrices=False)
    r = int(np.sum(s > 1e-10 * s[0])) if s.size and s[0] > 0 else 0
    if r == 0:
        return [np.eye(d)[0]]
    Q = Vt[:r].T  # d x r orthonormal basis of the row space
    Y = X @ Q
    if r == 1:
        low = [np.array([1.0]), np.array([-1.0])]
    elif r == 2:
        low = _sweep_2d(Y)
    else:
        low = _sweep_3d(Y)
    return [_unit(Q @ g) for g in low]


@dataclass
class MultiSMSolution:
    W_blocks: np.ndarray
    objective: float
    patterns: list
    meta: dict = field(default_factory=dict)

    @property
    def P(self) -> int:
        return len(self.patterns)

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "patterns": [p.to_dict() for p in self.patterns],
            "W_blocks": self.W_blocks.tolist(),
        }


def stacked_design(X, patterns):
    """Xt = [D_1 X, ..., D_P X] and Vt = [tr(D_1) I; ...; tr(D_P) I]."""
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    if not patterns:
        return np.zeros((n, 0)), np.zeros((0, d))
    for p in patterns:
        if p.mask.shape != (n,):
            raise DimensionMismatch(f"pattern of length {p.mask.size} for {n} data rows")
    Xt = np.hstack([p.diag[:, None] * X for p in patterns])
    Vt = np.vstack([p.trace * np.eye(d) for p in patterns])
    return Xt, Vt


def sm_objective_nd(W_blocks, X, patterns) -> float:
    X = np.asarray(X, dtype=float)
    W = np.asarray(W_blocks, dtype=float)
    S = sum((p.diag[:, None] * X) @ Wi for p, Wi in zip(patterns, W)) if len(patterns) else np.zeros_like(X)
    return 0.5 * float(np.sum(S * S)) + sum(p.trace * float(np.trace(Wi)) for p, Wi in zip(patterns, W))


def solve_sm_multivariate(data, patterns, rtol=1e-10, require_bounded=True) -> MultiSMSolution:
    """Closed-form minimizer W = -(Xt^T Xt)^+ Vt of the pattern-grouped loss.

    The loss is bounded below only if Vt lies in the range of G = Xt^T Xt.
    With exhaustive patterns that usually fails: two patterns differing in a
    single row k admit W_i = -W_j = w z^T with x_k^T w = 0, which leaves the
    fit unchanged but moves the trace term by w^T z. By default this raises
    UnboundedObjective. With require_bounded=False the result is the minimizer
    over W in range(G), i.e. the limit of gradient descent whose steps are
    projected onto range(G); meta["bounded"] records which case applied.
    """
    if not isinstance(data, DatasetND):
        data = make_dataset_nd(data)
    X = np.asarray(data.X, dtype=float)
    n, d = X.shape
    Xt, Vt = stacked_design(X, patterns)
    P = len(patterns)
    if P == 0:
        return MultiSMSolution(np.zeros((0, d, d)), 0.0, [])
    G = Xt.T @ Xt
    W = -least_squares_min_norm(G, Vt, rtol=rtol)
    resid = float(np.linalg.norm(G @ W + Vt))
    scale = max(1.0, float(np.linalg.norm(Vt)))
    bounded = resid <= RANGE_TOL * scale * max(1.0, float(np.linalg.norm(G)))
    if require_bounded and not bounded:
        raise UnboundedObjective(f"linear term is not in the range of Xt^T Xt (residual {resid:.3e})")
    blocks = W.reshape(P, d, d)
    obj = 0.5 * float(np.sum(Vt * W))
    return MultiSMSolution(blocks, obj, list(patterns), {"range_residual": resid, "bounded": bool(bounded)})


def _cone_rows(pattern, X):
    # (2D - I) X for ReLU masks; for sign patterns this is diag(sign) X, the same matrix
    return (2.0 * pattern.mask.astype(float) - 1.0)[:, None] * np.asarray(X, dtype=float)


def cone_violation(w, pattern, X) -> float:
    """Largest violation of (2D - I) X w >= 0."""
    c = _cone_rows(pattern, X) @ w
    return float(max(0.0, -c.min())) if c.size else 0.0


def cone_split(u, pattern, X, tol=SPLIT_TOL, max_sweeps=DYKSTRA_SWEEPS):
    """Write u = u_pos - u_neg with both parts in the cone of the pattern.

    If the pattern's generator is strictly inside the cone the split is
    u_pos = u + tau g, u_neg = tau g for the smallest adequate tau (doubled
    for a margin). Otherwise Dykstra's alternating projections are run.
    """
    u = np.asarray(u, dtype=float)
    X = np.asarray(X, dtype=float)
    C = _cone_rows(pattern, X)
    scale = max(1.0, float(np.linalg.norm(u)) * max(1.0, float(np.abs(X).max(initial=0.0))))
    if cone_violation(u, pattern, X) <= tol * scale:
        return u.copy(), np.zeros_like(u)
    if cone_violation(-u, pattern, X) <= tol * scale:
        return np.zeros_like(u), -u
    g = pattern.generator_u
    cg = C @ g
    cu = C @ u
    active = np.linalg.norm(X, axis=1) > 0
    if np.all(cg[active] > 1e-9 * np.linalg.norm(X[active], axis=1)):
        need = -cu[active] / cg[active]
        tau = 2.0 * max(0.0, float(need.max()))
        return u + tau * g, tau * g
    return _dykstra_split(u, C, tol * scale, max_sweeps)


def _dykstra_split(u, C, tol, max_sweeps):
    d = u.size
    # variables z = (p, q); constraints C p >= 0, C q >= 0 and p - q = u
    p, q = np.maximum(u, 0.0), np.maximum(-u, 0.0)
    z = np.concatenate([p, q])
    rows = [np.concatenate([c, np.zeros(d)]) for c in C] + [np.concatenate([np.zeros(d), c]) for c in C]
    rows = [r for r in rows if np.any(r)]
    incr = [np.zeros(2 * d) for _ in range(len(rows) + 1)]

    def proj_affine(v):
        p, q = v[:d], v[d:]
        r = (p - q - u) / 2.0
        return np.concatenate([p - r, q + r])

    for _ in range(max_sweeps):
        for k, a in enumerate(rows):
            y = z + incr[k]
            s = a @ y
            new = y if s >= 0 else y - (s / (a @ a)) * a
            incr[k] = y - new
            z = new
        y = z + incr[-1]
        new = proj_affine(y)
        incr[-1] = y - new
        z = new
        p, q = z[:d], z[d:]
        worst = max((-(a @ z) for a in rows), default=0.0)
        if worst <= tol:
            return p, q
    raise SplitInfeasible("alternating projections did not reach a feasible split; the pattern cone may be degenerate")


def reconstruct_network_nd(sol: MultiSMSolution, data, tol=SPLIT_TOL) -> TwoLayerParams:
    """Network with two neurons per rank-one factor of every block."""
    if not isinstance(data, DatasetND):
        data = make_dataset_nd(data)
    X = np.asarray(data.X, dtype=float)
    n, d = X.shape
    activation = sol.patterns[0].activation if sol.patterns else "relu"
    U, Vout = [], []
    for pat, Wi in zip(sol.patterns, sol.W_blocks):
        if not np.any(Wi):
            continue
        a, s, bt = np.linalg.svd(Wi)
        keep = s > 1e-12 * s[0]
        for k in np.flatnonzero(keep):
            u = np.sqrt(s[k]) * a[:, k]
            v = np.sqrt(s[k]) * bt[k]
            up, un = cone_split(u, pat, X, tol=tol)
            # shift both halves along the generator so rows outside the pattern are strictly negative
            gamma = 1e-3 * (np.linalg.norm(up) + np.linalg.norm(un) + np.linalg.norm(u))
            g = pat.generator_u
            U.extend([up + gamma * g, un + gamma * g])
            Vout.extend([v, -v])
    m = len(U)
    if m == 0:
        return TwoLayerParams(np.zeros((0, d)), np.zeros(0), np.zeros((d, 0)), np.zeros(d), np.zeros((d, d)), activation)
    W1 = np.array(U)
    W2 = np.array(Vout).T
    return TwoLayerParams(W1, np.zeros(m), W2, np.zeros(d), np.zeros((d, d)), activation, {"neurons": m})


def network_sm_loss_nd(params: TwoLayerParams, X, beta=0.0) -> float:
    """sum_i [tr(J s(x_i)) + 1/2 ||s(x_i)||^2] + beta/2 (||W1||^2 + ||W2||^2)."""
    X = np.asarray(X, dtype=float)
    Z = X @ params.W1.T + params.b1
    H = activate(Z, params.activation)
    G = activation_slope(Z, params.activation)
    S = H @ params.W2.T + X @ params.V.T + params.b2
    inner = np.einsum("jk,kj->j", params.W2.T, params.W1.T) if params.m else np.zeros(0)
    trace = float(np.sum(G @ inner)) + X.shape[0] * float(np.trace(params.V))
    decay = 0.5 * beta * (float(np.sum(params.W1**2)) + float(np.sum(params.W2**2)))
    return trace + 0.5 * float(np.sum(S * S)) + decay
