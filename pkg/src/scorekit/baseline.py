"""Non-convex reference trainer: univariate two-layer networks fitted with Adam.

Gradients are derived by hand. For the score-matching loss the activation
derivative inside the trace term is piecewise constant, so it is held fixed in
the backward pass (its true derivative is zero almost everywhere).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ArchitectureConfig, TwoLayerParams, activate, activation_slope
from .errors import DimensionMismatch

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
FD_STEP = 1e-5
GRAD_CHECK_FLOOR = 1e-3

PARAM_NAMES = ("W1", "b1", "W2", "b2", "V")


def _points(x):
    x = np.asarray(getattr(x, "points", x), dtype=float).ravel()
    return x


def _forward(params, x):
    if params.d != 1:
        raise DimensionMismatch("baseline losses are univariate")
    w, b, alpha = params.W1[:, 0], params.b1, params.W2[0]
    z = np.outer(x, w) + b
    h = activate(z, params.activation)
    g = activation_slope(z, params.activation)
    s = h @ alpha + params.V[0, 0] * x + params.b2[0]
    return z, h, g, s


def _sm_loss_from(params, x, fwd, beta) -> float:
    _, _, g, s = fwd
    w, alpha = params.W1[:, 0], params.W2[0]
    trace = float(np.sum(g @ (alpha * w))) + x.size * params.V[0, 0]
    decay = 0.5 * beta * (float(w @ w) + float(alpha @ alpha))
    return trace + 0.5 * float(s @ s) + decay


def _sm_grad_from(params, x, fwd, beta) -> dict:
    _, h, g, s = fwd
    w, alpha = params.W1[:, 0], params.W2[0]
    gsum = g.sum(axis=0)
    gs = g * s[:, None]  # (n, m)
    return {
        "W1": (alpha * gsum + alpha * (gs.T @ x) + beta * w)[:, None],
        "b1": alpha * gs.sum(axis=0),
        "W2": (w * gsum + h.T @ s + beta * alpha)[None, :],
        "b2": np.array([s.sum()]),
        "V": np.array([[x.size + float(s @ x)]]),
    }


def _labels(x, labels):
    l = np.asarray(labels, dtype=float).ravel()
    if l.size != x.size:
        raise DimensionMismatch(f"{x.size} points but {l.size} labels")
    return l


def _dsm_loss_from(params, x, l, fwd, beta) -> float:
    w, alpha = params.W1[:, 0], params.W2[0]
    r = fwd[3] - l
    return 0.5 * float(r @ r) + 0.5 * beta * (float(w @ w) + float(alpha @ alpha))


def _dsm_grad_from(params, x, l, fwd, beta) -> dict:
    _, h, g, s = fwd
    w, alpha = params.W1[:, 0], params.W2[0]
    r = s - l
    gr = g * r[:, None]
    return {
        "W1": (alpha * (gr.T @ x) + beta * w)[:, None],
        "b1": alpha * gr.sum(axis=0),
        "W2": (h.T @ r + beta * alpha)[None, :],
        "b2": np.array([r.sum()]),
        "V": np.array([[float(r @ x)]]),
    }


def loss_sm(params: TwoLayerParams, data, beta) -> float:
    """Empirical score-matching loss with weight decay on W1 and W2.

    sum_i [ d s/dx (x_i) + s(x_i)^2 / 2 ] + beta/2 (||W1||^2 + ||W2||^2)
    """
    x = _points(data)
    return _sm_loss_from(params, x, _forward(params, x), beta)


def loss_dsm(params: TwoLayerParams, noisy, labels, beta) -> float:
    x = _points(noisy)
    l = _labels(x, labels)
    return _dsm_loss_from(params, x, l, _forward(params, x), beta)


def grad_sm(params: TwoLayerParams, data, beta, train_skip=None) -> dict:
    x = _points(data)
    out = _sm_grad_from(params, x, _forward(params, x), beta)
    if train_skip is False:
        out["V"] = np.zeros((1, 1))
    return out


def grad_dsm(params: TwoLayerParams, noisy, labels, beta, train_skip=None) -> dict:
    x = _points(noisy)
    l = _labels(x, labels)
    out = _dsm_grad_from(params, x, l, _forward(params, x), beta)
    if train_skip is False:
        out["V"] = np.zeros((1, 1))
    return out


def _loss_and_grad(objective):
    if objective == "sm":
        return (lambda p, x, l, beta: loss_sm(p, x, beta)), (lambda p, x, l, beta: grad_sm(p, x, beta))
    if objective == "dsm":
        return loss_dsm, grad_dsm
    raise ValueError(f"unknown objective {objective!r}")


def _value_and_grad(objective, x, labels):
    """Loss and gradient closure sharing one forward pass per call."""
    if objective == "sm":
        def both(params, beta, need_grad=True):
            fwd = _forward(params, x)
            value = _sm_loss_from(params, x, fwd, beta)
            return value, (_sm_grad_from(params, x, fwd, beta) if need_grad and np.isfinite(value) else None)
    elif objective == "dsm":
        l = _labels(x, labels)

        def both(params, beta, need_grad=True):
            fwd = _forward(params, x)
            value = _dsm_loss_from(params, x, l, fwd, beta)
            return value, (_dsm_grad_from(params, x, l, fwd, beta) if need_grad and np.isfinite(value) else None)
    else:
        raise ValueError(f"unknown objective {objective!r}")
    return both


def grad_check(params: TwoLayerParams, data, objective="dsm", labels=None, beta=0.0, h=FD_STEP) -> float:
    """Max relative error between analytic and central-difference gradients.

    Relative error is |a - f| / max(|a|, |f|, GRAD_CHECK_FLOOR).
    """
    loss, grad = _loss_and_grad(objective)
    analytic = grad(params, data, labels, beta)
    worst = 0.0
    for name in PARAM_NAMES:
        arr = getattr(params, name)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + h
            fp = loss(params, data, labels, beta)
            arr[idx] = old - h
            fm = loss(params, data, labels, beta)
            arr[idx] = old
            fd = (fp - fm) / (2 * h)
            a = analytic[name][idx]
            err = abs(a - fd) / max(abs(a), abs(fd), GRAD_CHECK_FLOOR)
            worst = max(worst, err)
    return worst


@dataclass
class TrainConfig:
    learning_rate: float = 1e-2
    epochs: int = 500
    m: int | None = None
    seed: int = 0
    objective: str = "sm"
    architecture: ArchitectureConfig = field(default_factory=ArchitectureConfig)

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.objective not in ("sm", "dsm"):
            raise ValueError("objective must be 'sm' or 'dsm'")

    def metadata(self) -> dict:
        return {
            "optimizer": "adam",
            "adam_beta1": ADAM_BETA1,
            "adam_beta2": ADAM_BETA2,
            "adam_eps": ADAM_EPS,
            "init": "normal(0, 1/sqrt(m)) for all trainable parameters",
            "full_batch": True,
        }


@dataclass
class TrainResult:
    params: TwoLayerParams
    loss_curve: np.ndarray
    diverged: bool

    @property
    def final_loss(self) -> float:
        return float(self.loss_curve[-1])


def init_params(m, activation, skip, rng) -> TwoLayerParams:
    sd = 1.0 / np.sqrt(m)
    p = TwoLayerParams(
        rng.normal(0.0, sd, (m, 1)),
        rng.normal(0.0, sd, m),
        rng.normal(0.0, sd, (1, m)),
        rng.normal(0.0, sd, 1),
        rng.normal(0.0, sd, (1, 1)) if skip else np.zeros((1, 1)),
        activation,
    )
    return p


def adam_train(cfg: TrainConfig, data, labels=None) -> TrainResult:
    """Full-batch Adam, one update per epoch. Divergence is flagged, not raised."""
    x = _points(data)
    arch = cfg.architecture
    m = cfg.m or 4 * x.size
    rng = np.random.default_rng(cfg.seed)
    params = init_params(m, arch.activation, arch.skip, rng)
    both = _value_and_grad(cfg.objective, x, labels)
    names = PARAM_NAMES if arch.skip else PARAM_NAMES[:4]
    mom = {k: np.zeros_like(getattr(params, k)) for k in names}
    vel = {k: np.zeros_like(getattr(params, k)) for k in names}
    curve = []
    diverged = False
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, cfg.epochs + 1):
            cur, g = both(params, arch.beta)
            curve.append(cur)
            if not np.isfinite(cur):
                diverged = True
                break
            for k in names:
                mom[k] = ADAM_BETA1 * mom[k] + (1 - ADAM_BETA1) * g[k]
                vel[k] = ADAM_BETA2 * vel[k] + (1 - ADAM_BETA2) * g[k] ** 2
                mhat = mom[k] / (1 - ADAM_BETA1**step)
                vhat = vel[k] / (1 - ADAM_BETA2**step)
                getattr(params, k)[...] -= cfg.learning_rate * mhat / (np.sqrt(vhat) + ADAM_EPS)
        else:
            final, _ = both(params, arch.beta, need_grad=False)
            curve.append(final)
            diverged = not np.isfinite(final)
    return TrainResult(params, np.asarray(curve, dtype=float), diverged)
