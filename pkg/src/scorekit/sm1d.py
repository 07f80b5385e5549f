"""Univariate score matching as a convex program.

For sorted training points x_1 < ... < x_n, a two-layer network with ReLU or
absolute-value hidden units (optionally with a linear skip term V x) trained
with the score-matching loss plus weight decay beta has the same optimum as

    min_y  1/2 ||A y||^2 + b^T y + w * ||y||_1  (+ c for skip variants)

where A collects mean-centred hinge features anchored at the data points and
b collects the column sums of the activation-derivative matrices. The penalty
weight w is beta, except for ReLU with skip where it is 2 * beta.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ArchitectureConfig, Dataset1D, TwoLayerParams, evaluate_network, sign
from .errors import BetaOutOfRegime, BetaTooSmall, DimensionMismatch, NotApplicable, TOutOfRange
from .prox import DEFAULT_MAX_ITERS, DEFAULT_TOL, L1QuadraticProblem, LassoSolution, solve_l1_quadratic

RELU_EPS = 1e-12

# hidden-unit blocks of each variant: (feature, direction, bias shift)
#   feature "fwd" -> (x - x_j)_+ or |x - x_j|; "bwd" -> (x_j - x)_+ or |x_j - x|
_BLOCKS = {
    "relu_noskip": (("fwd", 0.0), ("fwd", 1.0), ("bwd", 0.0), ("bwd", -1.0)),
    "abs_noskip": (("fwd", 0.0), ("bwd", 0.0)),
    "abs_skip": (("fwd", 0.0), ("bwd", 0.0)),
    "relu_skip": (("fwd", 0.0), ("bwd", 0.0)),
}

MIN_BETA = {"relu_noskip": 1.0, "abs_noskip": 1.0, "relu_skip": 1.0, "abs_skip": 2.0}


@dataclass(frozen=True)
class SMProgram1D:
    A: np.ndarray
    b_lin: np.ndarray
    c_const: float
    variant: str
    beta: float
    points: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def k(self) -> int:
        return self.A.shape[1]

    @property
    def l1_weight(self) -> float:
        return 2.0 * self.beta if self.variant == "relu_skip" else self.beta

    def to_problem(self) -> L1QuadraticProblem:
        return L1QuadraticProblem(self.A, self.b_lin, self.l1_weight)

    def objective(self, y) -> float:
        """Program value including the skip constant."""
        return self.to_problem().objective(y) + self.c_const


@dataclass(frozen=True)
class BetaThresholds:
    b_inf: float
    beta_low: float


@dataclass(frozen=True)
class PiecewiseLinearScore:
    """Continuous piecewise-linear function; segment i is slopes[i] * x + intercepts[i]."""

    breakpoints: np.ndarray
    slopes: np.ndarray
    intercepts: np.ndarray
    t_param: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        seg = np.searchsorted(self.breakpoints, x, side="right")
        return self.slopes[seg] * x + self.intercepts[seg]

    def continuity_gap(self) -> float:
        if self.breakpoints.size == 0:
            return 0.0
        bp = self.breakpoints
        left = self.slopes[:-1] * bp + self.intercepts[:-1]
        right = self.slopes[1:] * bp + self.intercepts[1:]
        return float(np.max(np.abs(left - right)))


def _hinges(x, activation):
    diff = x[:, None] - x[None, :]  # [i, j] = x_i - x_j
    if activation == "relu":
        return np.maximum(diff, 0.0), np.maximum(-diff, 0.0)
    a = np.abs(diff)
    return a, a


def _center(M):
    return M - M.mean(axis=0, keepdims=True)


def _noskip_parts(x, activation):
    """Uncentred feature blocks and linear coefficients of the no-skip program."""
    diff = x[:, None] - x[None, :]
    if activation == "relu":
        A1, A2 = _hinges(x, "relu")
        C1 = (diff >= 0).sum(axis=0)
        C2 = (diff > 0).sum(axis=0)
        C3 = (-diff >= 0).sum(axis=0)
        C4 = (-diff > 0).sum(axis=0)
        feats = np.hstack([A1, A1, A2, A2])
        b = np.concatenate([C1, C2, -C3, -C4]).astype(float)
    else:
        A1, _ = _hinges(x, "abs")
        C1 = sign(diff).sum(axis=0)
        C2 = sign(-diff).sum(axis=0)
        feats = np.hstack([A1, A1])
        b = np.concatenate([C1, -C2]).astype(float)
    return feats, b


def check_beta(variant, beta):
    lo = MIN_BETA[variant]
    if beta < lo:
        raise BetaTooSmall(
            f"beta={beta} < {lo} for {variant}: the score-matching loss is unbounded below "
            "(a single neuron can drive it to -infinity, see the unboundedness example for beta<1)"
        )


def build_sm_program(data: Dataset1D, cfg: ArchitectureConfig, enforce_beta: bool = True) -> SMProgram1D:
    variant = cfg.variant
    if enforce_beta:
        check_beta(variant, cfg.beta)
    x = np.asarray(data.points, dtype=float)
    n = x.size
    activation = "abs" if variant == "relu_skip" else cfg.activation
    feats, b = _noskip_parts(x, activation)
    A = _center(feats)
    c = 0.0
    if cfg.skip:
        xbar = x - x.mean()
        nrm2 = float(xbar @ xbar)
        B = np.eye(n) - np.outer(xbar, xbar) / nrm2
        b = A.T @ (-n * xbar / nrm2) + b
        A = B @ A
        c = -(n**2) / (2.0 * nrm2)
    return SMProgram1D(A=A, b_lin=b, c_const=c, variant=variant, beta=float(cfg.beta), points=x)


def _spike_indices(variant, n):
    if variant == "relu_noskip":
        return 0, 3 * n - 1
    if variant == "abs_noskip":
        return 0, 2 * n - 1
    raise NotApplicable(f"two-spike thresholds are defined for no-skip variants only, got {variant}")


def compute_beta_thresholds(data: Dataset1D, cfg: ArchitectureConfig) -> BetaThresholds:
    """Interval (beta_low, b_inf] on which the two-spike (Gaussian-interior) solution is optimal.

    With the two-spike solution, A y = ((beta - n) / (n v)) * xbar, so the KKT
    condition of every other coordinate j reads |c_j (beta - n) + b_j| <= beta,
    c_j = a_j^T xbar / (n v). Each is an interval in beta containing n; beta_low
    is the largest of their lower endpoints.
    """
    if cfg.skip:
        raise NotApplicable("skip variants have a zero-solution threshold only (||b||_inf)")
    prog = build_sm_program(data, cfg, enforce_beta=False)
    n, v = data.n, data.v
    i1, i2 = _spike_indices(prog.variant, n)
    xbar = np.asarray(data.points) - data.mu
    coef = prog.A.T @ xbar / (n * v)
    keep = np.ones(prog.k, dtype=bool)
    keep[[i1, i2]] = False
    lows = [_lower_endpoint(cj, bj, n) for cj, bj in zip(coef[keep], prog.b_lin[keep])]
    b_inf = float(np.abs(prog.b_lin).max())
    beta_low = max([0.0] + lows)
    return BetaThresholds(b_inf=b_inf, beta_low=float(beta_low))


def _lower_endpoint(c, b, n):
    """Smallest beta >= 0 with |c (beta - n) + b| <= beta, given the set contains n."""
    # c*beta + (b - c n) <= beta   and   c*beta + (b - c n) >= -beta
    r = b - c * n
    lo = 0.0
    # (c - 1) beta <= -r
    if c - 1 < 0:
        lo = max(lo, -r / (c - 1))
    elif c - 1 == 0 and -r < 0:
        return np.inf
    # (c + 1) beta >= -r
    if c + 1 > 0:
        lo = max(lo, -r / (c + 1))
    elif c + 1 == 0 and -r > 0:
        return np.inf
    return lo


def neuron_counts(variant, n):
    return len(_BLOCKS[variant]) * n


def bias_shift(points, eps=RELU_EPS):
    """Offset separating the >= and > indicator neurons, relative to the data scale."""
    return eps * max(1.0, float(np.max(np.abs(points))))


def reconstruct_network(y_star, data: Dataset1D, cfg: ArchitectureConfig, eps: float = RELU_EPS) -> TwoLayerParams:
    """Network weights achieving the program value at y_star.

    Output weights carry the sign of y: alpha_j = sign(y_j) sqrt(|y_j|).
    The strict-indicator ReLU blocks put their kink ``bias_shift`` past the data
    point; the objective error this introduces is linear in eps.
    """
    variant = cfg.variant
    x = np.asarray(data.points, dtype=float)
    n = x.size
    eps = bias_shift(x, eps)
    y = np.asarray(y_star, dtype=float).ravel()
    if y.size != neuron_counts(variant, n):
        raise DimensionMismatch(f"{variant} expects y of length {neuron_counts(variant, n)}, got {y.size}")
    mag = np.sqrt(2.0 * np.abs(y)) if variant == "relu_skip" else np.sqrt(np.abs(y))
    s = sign(y)
    w = np.empty(y.size)
    b = np.empty(y.size)
    for blk, (kind, shift) in enumerate(_BLOCKS[variant]):
        sl = slice(blk * n, (blk + 1) * n)
        if kind == "fwd":
            w[sl] = mag[sl]
            b[sl] = -mag[sl] * (x + shift * eps)
        else:
            w[sl] = -mag[sl]
            b[sl] = mag[sl] * (x + shift * eps)
    alpha = s * mag

    if variant in ("relu_noskip", "abs_noskip"):
        feats, _ = _noskip_parts(x, cfg.activation)
        b0 = -float((feats @ y).mean())
        V = 0.0
        activation = cfg.activation
    else:
        feats, _ = _noskip_parts(x, "abs")
        xbar = x - x.mean()
        v_a = -(float(xbar @ (feats @ y)) + n) / float(xbar @ xbar)
        b0_a = -float((feats @ y + x * v_a).mean())
        if variant == "abs_skip":
            V, b0, activation = v_a, b0_a, "abs"
        else:
            V = v_a - 0.5 * float(np.sum(w * alpha))
            b0 = b0_a - 0.5 * float(np.sum(b * alpha))
            activation = "relu"
    params = TwoLayerParams(w[:, None], b, alpha[None, :], [b0], [[V]], activation)
    params.meta.update(variant=variant, eps=eps)
    return params


def closed_form_score(data: Dataset1D, cfg: ArchitectureConfig, t: float = 0.0, thresholds=None) -> PiecewiseLinearScore:
    """Analytic optimal score for the regime that contains cfg.beta."""
    n, v, mu = data.n, data.v, data.mu
    beta = cfg.beta
    x1, xn = float(data.points[0]), float(data.points[-1])
    if cfg.skip:
        prog = build_sm_program(data, cfg, enforce_beta=False)
        if prog.l1_weight < float(np.abs(prog.b_lin).max()):
            raise BetaOutOfRegime("skip closed form needs the zero solution (penalty >= ||b||_inf)")
        return PiecewiseLinearScore(np.empty(0), np.array([-1.0 / v]), np.array([mu / v]), 0.0)
    th = thresholds or compute_beta_thresholds(data, cfg)
    if beta > th.b_inf:
        return PiecewiseLinearScore(np.empty(0), np.zeros(1), np.zeros(1), 0.0)
    if not beta > th.beta_low:
        raise BetaOutOfRegime(f"beta={beta} is not in ({th.beta_low}, {th.b_inf}]")
    half = (n - beta) / (2 * n * v)
    if abs(t) > half * (1 + 1e-12):
        raise TOutOfRange(f"|t|={abs(t)} exceeds (n - beta)/(2 n v) = {half}")
    s_in = (beta - n) / (n * v)
    if cfg.activation == "relu":
        s_left, s_right = -(half + t), -half + t
    else:
        s_left, s_right = -2.0 * t, 2.0 * t
    c_in = -s_in * mu
    v1 = s_in * x1 + c_in
    vn = s_in * xn + c_in
    slopes = np.array([s_left, s_in, s_right])
    intercepts = np.array([v1 - s_left * x1, c_in, vn - s_right * xn])
    return PiecewiseLinearScore(np.array([x1, xn]), slopes, intercepts, float(t))


def two_spike_solution(data: Dataset1D, cfg: ArchitectureConfig, t: float = 0.0) -> np.ndarray:
    """The analytic y* of the no-skip program for beta in (beta_low, b_inf]."""
    n, v = data.n, data.v
    i1, i2 = _spike_indices(cfg.variant, n)
    y = np.zeros(neuron_counts(cfg.variant, n))
    y[i1] = (cfg.beta - n) / (2 * n * v) + t
    y[i2] = (n - cfg.beta) / (2 * n * v) + t
    return y


def fitted_t(y_star, data: Dataset1D, cfg: ArchitectureConfig) -> float:
    """Exterior-slope parameter t implied by a solver solution (no-skip variants)."""
    n, v = data.n, data.v
    i1, i2 = _spike_indices(cfg.variant, n)
    y = np.asarray(y_star)
    if cfg.variant == "relu_noskip":
        # right exterior slope = sum of all forward-hinge weights
        right = y[: 2 * n].sum()
        return float(right - (cfg.beta - n) / (2 * n * v))
    return float(0.5 * (y[i1] + y[i2]))


@dataclass
class SMFit:
    program: SMProgram1D
    solution: LassoSolution
    params: TwoLayerParams
    objective: float
    thresholds: BetaThresholds | None

    @property
    def y_star(self):
        return self.solution.y_star

    def score(self, x):
        return evaluate_network(self.params, x)


def fit_sm(data: Dataset1D, cfg: ArchitectureConfig, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS, eps=RELU_EPS) -> SMFit:
    prog = build_sm_program(data, cfg)
    sol = solve_l1_quadratic(prog.to_problem(), tol=tol, max_iters=max_iters)
    params = reconstruct_network(sol.y_star, data, cfg, eps=eps)
    th = None if cfg.skip else compute_beta_thresholds(data, cfg)
    return SMFit(prog, sol, params, sol.objective + prog.c_const, th)
