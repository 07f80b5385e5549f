"""First-order solvers for the convex programs produced by the reformulations.

Three problem shapes share one accelerated proximal-gradient engine:

* ``solve_l1_quadratic``: min 1/2 ||A y||^2 + b^T y + beta ||y||_1
* ``solve_lasso``:        min 1/2 ||A y + target||^2 + beta ||y||_1
* ``solve_group_lasso``:  min ||K Z - L||_F^2 + lam * sum_j ||Z_j||_2   (rows Z_j)

The engine is monotone FISTA (Beck & Teboulle) with function-value restart,
started from zero. A backtracking guard protects against an underestimated
Lipschitz constant. The L1 shapes additionally try an active-set polish.
On the current support with fixed signs the problem is a quadratic. The
polish first walks along null(A_S) to make the support columns linearly
independent, then moves toward the quadratic's minimizer, dropping
coordinates that hit zero on the way. The result is accepted only when it
lowers the objective. For more than 100 columns a working-set outer loop
restricts the solve to the coordinates that violate optimality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import sign
from .errors import DimensionMismatch

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 200_000
POWER_ITERS = 50
POWER_TOL = 1e-10
MONOTONE_SLACK = 1e-12
WORKING_SET_MIN = 100
WORKING_SET_GROW = 10
NULL_RTOL = 1e-9
FLAT_STEP_MAX = 1e6


class Status(str, Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class L1QuadraticProblem:
    A: np.ndarray
    b_lin: np.ndarray
    beta: float

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b_lin, dtype=float).ravel()
        if A.shape[1] != b.shape[0]:
            raise DimensionMismatch(f"A has {A.shape[1]} columns but b_lin has length {b.shape[0]}")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b_lin", b)

    def objective(self, y) -> float:
        y = np.asarray(y, dtype=float)
        r = self.A @ y
        return float(0.5 * r @ r + self.b_lin @ y + self.beta * np.abs(y).sum())


@dataclass
class LassoSolution:
    y_star: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    status: Status
    history: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


def l1_kkt_residual(grad, y, beta) -> float:
    """Max violation of 0 in grad + beta * d||y||_1, with sign(0)=+1 on the support test."""
    grad = np.asarray(grad, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        return 0.0
    on = y != 0
    viol = np.where(on, np.abs(grad + beta * sign(y)), np.maximum(np.abs(grad) - beta, 0.0))
    return float(viol.max())


def group_kkt_residual(grad, Z, lam) -> float:
    grad = np.asarray(grad, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if Z.size == 0:
        return 0.0
    norms = np.linalg.norm(Z, axis=1)
    gnorm = np.linalg.norm(grad, axis=1)
    on = norms > 0
    safe = np.where(on, norms, 1.0)[:, None]
    active = np.linalg.norm(grad + lam * Z / safe, axis=1)
    viol = np.where(on, active, np.maximum(gnorm - lam, 0.0))
    return float(viol.max())


def power_iteration(A, iters=POWER_ITERS, tol=POWER_TOL) -> float:
    """Largest eigenvalue of A^T A."""
    A = np.atleast_2d(A)
    k = A.shape[1]
    if k == 0 or not np.any(A):
        return 0.0
    v = np.random.default_rng(0).standard_normal(k)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = A.T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        new = float(v @ w)
        v = w / nw
        if abs(new - lam) <= tol * max(new, 1.0):
            lam = new
            break
        lam = new
    return float(lam)


def soft_threshold(v, thresh):
    return np.sign(v) * np.maximum(np.abs(v) - thresh, 0.0)


def block_soft_threshold(V, thresh):
    norms = np.linalg.norm(V, axis=1, keepdims=True)
    scale = np.maximum(1.0 - thresh / np.where(norms > 0, norms, 1.0), 0.0)
    return V * scale


class _Smooth:
    """f(Y) = scale/2 ||A Y - R||^2 + <C, Y> with A Y cached by the caller."""

    def __init__(self, A, R, C, scale):
        self.A, self.R, self.C, self.scale = A, R, C, scale

    def value(self, Y, AY):
        r = AY - self.R
        return 0.5 * self.scale * float(np.sum(r * r)) + float(np.sum(self.C * Y))

    def grad(self, AY):
        return self.scale * (self.A.T @ (AY - self.R)) + self.C


def _mfista(smooth, penalty, prox, kkt, shape, tol, max_iters, polish=None, unbounded_check=None, x0=None):
    """Monotone FISTA from x0 (default zero). Returns (Y, F, kkt, iters, status, history)."""
    A = smooth.A
    L = smooth.scale * power_iteration(A)
    L = max(L, 1e-300)
    x = np.zeros(shape) if x0 is None else np.array(x0, dtype=float)
    Ax = A @ x
    Fx = smooth.value(x, Ax) + penalty(x)
    history = [Fx]
    w, Aw = x.copy(), Ax.copy()
    t = 1.0
    fresh = True  # w == x, so the step below is a plain proximal-gradient step
    res = kkt(smooth.grad(Ax), x)
    if res <= tol:
        return x, Fx, res, 0, Status.CONVERGED, np.array(history)
    unbounded_floor = -1.0 / tol
    last_support = None
    anchor, anchor_iter = x.copy(), 0
    k = 0
    for k in range(1, max_iters + 1):
        gw = smooth.grad(Aw)
        fw = smooth.value(w, Aw)
        while True:
            z = prox(w - gw / L, 1.0 / L)
            Az = A @ z
            dz = z - w
            fz = smooth.value(z, Az)
            if fz <= fw + float(np.sum(gw * dz)) + 0.5 * L * float(np.sum(dz * dz)) + 1e-12 * (1 + abs(fw)):
                break
            L *= 2.0
        Fz = fz + penalty(z)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        # a proximal-gradient step from x cannot increase F in exact
        # arithmetic, so accept it when the increase is pure roundoff
        slack = MONOTONE_SLACK * max(1.0, abs(Fx)) if fresh else 0.0
        if Fz <= Fx + slack:
            x_prev, Ax_prev = x, Ax
            x, Ax, Fx = z, Az, Fz
            w = x + ((t - 1.0) / t_new) * (x - x_prev)
            Aw = Ax + ((t - 1.0) / t_new) * (Ax - Ax_prev)
            t = t_new
            fresh = False
        else:
            # restart momentum from the best point
            w, Aw, t = x.copy(), Ax.copy(), 1.0
            fresh = True
        history.append(Fx)

        if Fx < unbounded_floor:
            return x, -np.inf, np.inf, k, Status.UNBOUNDED, np.array(history)
        if unbounded_check is not None and k - anchor_iter >= 200:
            if unbounded_check(x - anchor):
                return x, -np.inf, np.inf, k, Status.UNBOUNDED, np.array(history)
            anchor, anchor_iter = x.copy(), k

        if k % 10 == 0 or k == max_iters:
            g = smooth.grad(Ax)
            res = kkt(g, x)
            if res <= tol:
                return x, Fx, res, k, Status.CONVERGED, np.array(history)
            if polish is not None:
                support = tuple(np.flatnonzero(x))
                if support != last_support or k % 500 == 0:
                    last_support = support
                    out = polish(x, Fx)
                    if out is not None:
                        x, Ax, Fx = out
                        history.append(Fx)
                        w, Aw, t = x.copy(), Ax.copy(), 1.0
                        fresh = True
                        res = kkt(smooth.grad(Ax), x)
                        if res <= tol:
                            return x, Fx, res, k, Status.CONVERGED, np.array(history)
    g = smooth.grad(Ax)
    return x, Fx, kkt(g, x), k, Status.MAX_ITERS, np.array(history)


def _l1_polisher(A, lin, beta, objective):
    """Primal active-set walk on the current sign pattern.

    First the support is reduced to linearly independent columns by moving
    along null(A_S), where the objective is linear (strictly descending, or
    flat once the descent slope vanishes). The walk then heads for the
    minimizer of the quadratic on the current face, dropping any coordinate
    that reaches zero first. The candidate is accepted only if it does not
    increase the objective.
    """

    def polish(y, Fy):
        S = np.flatnonzero(y)
        if S.size == 0:
            return None
        walked = _null_space_walk(A, lin, beta, S, y[S].copy(), sign(y[S]))
        if walked is None:
            return None
        S, cur, s = walked
        if S.size:
            S, cur, s = _face_walk(A[:, S], -(lin[S] + beta * s), S, cur, s)
        if np.any(s * cur <= 0):
            return None
        cand = np.zeros_like(y)
        cand[S] = cur
        Ac = A @ cand
        Fc = objective(cand, Ac)
        if Fc > Fy + MONOTONE_SLACK * max(1.0, abs(Fy)):
            return None
        return cand, Ac, Fc

    return polish


def _face_walk(AS, rhs, S, cur, s):
    """Walk toward argmin 1/2 ||A_S c||^2 - rhs^T c on a full-rank face.

    G^-1 is kept up to date with the rank-one deletion formula, so each
    blocked leg costs O(|S|^2). The final point is re-solved directly.
    """
    G = AS.T @ AS
    try:
        Ginv = np.linalg.inv(G)
    except np.linalg.LinAlgError:
        Ginv = np.linalg.pinv(G)
    idx = np.arange(S.size)
    while idx.size:
        target = Ginv @ rhs[idx]
        direction = target - cur
        blocking = s * direction < 0
        ratios = np.full(idx.size, np.inf)
        ratios[blocking] = -cur[blocking] / direction[blocking]
        j = int(np.argmin(ratios))
        if ratios[j] >= 1.0:
            cur = target
            break
        cur = cur + ratios[j] * direction
        keep = np.arange(idx.size) != j
        Ginv = Ginv[np.ix_(keep, keep)] - np.outer(Ginv[keep, j], Ginv[j, keep]) / Ginv[j, j]
        idx, cur, s = idx[keep], cur[keep], s[keep]
    if idx.size:
        sub = AS[:, idx]
        exact, *_ = np.linalg.lstsq(sub.T @ sub, rhs[idx], rcond=None)
        if np.all(s * exact > 0):
            cur = exact
    return S[idx], cur, s


def _null_space_walk(A, lin, beta, S, cur, s, rtol=NULL_RTOL):
    """Remove the null space of A_S by moving along it and dropping blocking coordinates.

    Moving by d with A_S d = 0 leaves the quadratic part unchanged, so the
    objective changes at rate g^T d (g the face gradient). The walk follows
    d = -N N^T g while that slope is negative (N an orthonormal null-space
    basis) and any null direction once it is flat, unless the flat step is
    unreasonably long compared with the current point. When a coordinate hits
    zero it is removed and N is reduced to the directions that keep it at zero
    with one Householder reflection. Returns None if a descent ray is
    unblocked (the objective is unbounded on this face).
    """
    AS = A[:, S]
    _, sv, Vt = np.linalg.svd(AS, full_matrices=True)
    cut = rtol * max(float(sv[0]) if sv.size else 0.0, 1.0)
    rank = int(np.sum(sv > cut))
    N = Vt[rank:].T.copy()
    if N.shape[1] == 0:
        return S, cur, s
    g = AS.T @ (AS @ cur) + lin[S] + beta * s
    gscale = max(1.0, float(np.abs(g).max()))
    while N.shape[1] > 0 and S.size > 0:
        coef = N.T @ g
        flat = np.linalg.norm(coef) <= 1e-12 * gscale
        if not flat:
            d = -N @ coef
            if not np.any(s * d < 0):
                return None
        else:
            d = N[:, 0]
            if not np.any(s * d < 0):
                d = -d
        blocking = s * d < 0
        ratios = np.full(S.size, np.inf)
        ratios[blocking] = -cur[blocking] / d[blocking]
        j = int(np.argmin(ratios))
        if flat and ratios[j] * np.abs(d).max() > FLAT_STEP_MAX * max(1.0, float(np.abs(cur).max())):
            # a (numerically) flat ray that is only blocked far away: the face
            # has a recession direction, so leave it to the iterative solver
            return None
        cur = cur + ratios[j] * d
        u = N[j] / np.linalg.norm(N[j])
        u[0] += 1.0 if u[0] >= 0 else -1.0
        u /= np.linalg.norm(u)
        N = (N - 2.0 * np.outer(N @ u, u))[:, 1:]
        keep = np.arange(S.size) != j
        S, cur, s, g, N = S[keep], cur[keep], s[keep], g[keep], N[keep]
    return S, cur, s


def _l1_recession(A, lin, beta):
    """Return a check for drift directions along which the L1 objective decreases linearly."""
    col_scale = max(float(np.abs(A).max()) if A.size else 0.0, 1.0)

    def check(d):
        n1 = np.abs(d).sum()
        if n1 == 0:
            return False
        u = d / n1
        curv = np.linalg.norm(A @ u)
        slope = float(lin @ u) + beta
        return curv <= 1e-10 * col_scale and slope < -1e-9

    return check


def _solve_l1(A, lin, beta, const, tol, max_iters, polish=True):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    lin = np.asarray(lin, dtype=float).ravel()
    k = A.shape[1]
    if tol <= 0:
        raise ValueError("tol must be positive")

    col_norms = np.linalg.norm(A, axis=0)
    scale = max(float(col_norms.max()) if k else 0.0, 1.0)
    flat = (col_norms <= 1e-12 * scale) & (np.abs(lin) > beta * (1 + 1e-12) + 1e-15)
    if np.any(flat):
        # a zero column whose linear coefficient beats the penalty is a recession direction
        y = np.zeros(k)
        return LassoSolution(y, -np.inf, np.inf, 0, Status.UNBOUNDED, np.array([const]))

    if k <= WORKING_SET_MIN:
        y, F, res, it, status, hist = _solve_l1_dense(A, lin, beta, tol, max_iters, polish)
        return LassoSolution(y, F + const, res, it, status, hist + const)

    # Working-set strategy: solve on a small column subset, then add the
    # coordinates that violate the full optimality conditions.
    y = np.zeros(k)
    viol = np.abs(lin) - beta
    work = np.flatnonzero(viol > 0)
    if work.size == 0:
        return LassoSolution(y, const, float(max(viol.max(), 0.0)), 0, Status.CONVERGED, np.array([const]))
    work = work[np.argsort(-viol[work])][:WORKING_SET_GROW]
    work = np.sort(work)
    total_it, hist_all = 0, [np.array([const])]
    while True:
        yw, F, _, it, status, hist = _solve_l1_dense(
            A[:, work], lin[work], beta, tol, max_iters - total_it, polish, x0=y[work]
        )
        total_it += it
        hist_all.append(hist + const)
        y = np.zeros(k)
        y[work] = yw
        if status == Status.UNBOUNDED:
            return LassoSolution(y, -np.inf, np.inf, total_it, status, np.concatenate(hist_all))
        g = A.T @ (A @ y) + lin
        res = l1_kkt_residual(g, y, beta)
        if res <= tol:
            return LassoSolution(y, F + const, res, total_it, Status.CONVERGED, np.concatenate(hist_all))
        outside = np.setdiff1d(np.flatnonzero(np.abs(g) > beta + tol), work)
        if outside.size == 0 or total_it >= max_iters:
            return LassoSolution(y, F + const, res, total_it, Status.MAX_ITERS, np.concatenate(hist_all))
        grow = max(WORKING_SET_GROW, work.size)
        add = outside[np.argsort(-np.abs(g[outside]))][:grow]
        work = np.union1d(work, add)


def _solve_l1_dense(A, lin, beta, tol, max_iters, polish=True, x0=None):
    smooth = _Smooth(A, np.zeros(A.shape[0]), lin, 1.0)

    def penalty(y):
        return beta * float(np.abs(y).sum())

    def objective(y, Ay):
        return smooth.value(y, Ay) + penalty(y)

    return _mfista(
        smooth,
        penalty,
        lambda v, step: soft_threshold(v, beta * step),
        lambda g, y: l1_kkt_residual(g, y, beta),
        (A.shape[1],),
        tol,
        max(max_iters, 1),
        polish=_l1_polisher(A, lin, beta, objective) if polish else None,
        unbounded_check=_l1_recession(A, lin, beta),
        x0=x0,
    )


def solve_l1_quadratic(prob: L1QuadraticProblem, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS) -> LassoSolution:
    """Minimize 1/2 ||A y||^2 + b_lin^T y + beta ||y||_1 starting from y = 0.

    Reports ``Status.UNBOUNDED`` when the objective drops below -1/tol, or when
    the iterates drift along a direction with A d = 0 and b^T d + beta ||d||_1 < 0.
    """
    return _solve_l1(prob.A, prob.b_lin, prob.beta, 0.0, tol, max_iters)


def solve_lasso(A, target, beta, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS) -> LassoSolution:
    """Minimize 1/2 ||A y + target||^2 + beta ||y||_1.

    Note the sign convention: ``target`` enters with a plus sign.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    target = np.asarray(target, dtype=float).ravel()
    if A.shape[0] != target.shape[0]:
        raise DimensionMismatch(f"A has {A.shape[0]} rows but target has length {target.shape[0]}")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    return _solve_l1(A, A.T @ target, beta, 0.5 * float(target @ target), tol, max_iters)


def lasso_objective(A, target, beta, y) -> float:
    r = np.asarray(A) @ y + target
    return float(0.5 * r @ r + beta * np.abs(y).sum())


@dataclass
class GroupLassoSolution:
    Z: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    status: Status
    history: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))


def group_lasso_objective(K, L, lam, Z) -> float:
    r = np.asarray(K) @ Z - L
    return float(np.sum(r * r) + lam * np.linalg.norm(Z, axis=1).sum())


def solve_group_lasso(K, L, lam, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS, full_output=False):
    """Minimize ||K Z - L||_F^2 + lam * sum_j ||Z_j||_2 over the rows of Z.

    Returns Z of shape (c, d); with ``full_output=True`` a GroupLassoSolution.
    """
    K = np.atleast_2d(np.asarray(K, dtype=float))
    L = np.asarray(L, dtype=float)
    if L.ndim == 1:
        L = L[:, None]
    if K.shape[0] != L.shape[0]:
        raise DimensionMismatch(f"K has {K.shape[0]} rows but L has {L.shape[0]}")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    c, d = K.shape[1], L.shape[1]
    smooth = _Smooth(K, L, np.zeros((c, d)), 2.0)

    def penalty(Z):
        return lam * float(np.linalg.norm(Z, axis=1).sum())

    Z, F, res, it, status, hist = _mfista(
        smooth,
        penalty,
        lambda V, step: block_soft_threshold(V, lam * step),
        lambda g, Z: group_kkt_residual(g, Z, lam),
        (c, d),
        tol,
        max_iters,
    )
    sol = GroupLassoSolution(Z, F, res, it, status, hist)
    return sol if full_output else Z


def least_squares_min_norm(A, B, rtol=1e-10) -> np.ndarray:
    """Return pinv(A) @ B with singular values below rtol * s_max treated as zero."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    vec = B.ndim == 1
    if vec:
        B = B[:, None]
    if A.shape[0] != B.shape[0]:
        raise DimensionMismatch(f"A has {A.shape[0]} rows but B has {B.shape[0]}")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    keep = s > rtol * s[0] if s.size and s[0] > 0 else np.zeros_like(s, dtype=bool)
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    X = Vt.T @ (inv[:, None] * (U.T @ B))
    return X[:, 0] if vec else X
