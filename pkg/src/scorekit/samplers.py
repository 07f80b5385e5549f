"""Langevin Monte Carlo, annealed Langevin, and the closed-form target density.

The LMC update is x <- x + eta * s(x) + sqrt(2 eta) z with z standard normal.
Each chain draws from its own Philox stream keyed by (seed, chain); the step
index is the stream position, so results do not depend on how chains are
batched. Chains are advanced in vectorized chunks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ArchitectureConfig, Dataset1D, NoiseSchedule
from .errors import LengthMismatch, NonFiniteState
from .sm1d import closed_form_score

ETA_SCALE = 1e-3
CHUNK = 4096
SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class Uniform:
    lo: float = -1.0
    hi: float = 1.0

    def sample(self, rng, d):
        return rng.uniform(self.lo, self.hi, d)


@dataclass(frozen=True)
class Gaussian:
    mean: float = 0.0
    sd: float = 1.0

    def sample(self, rng, d):
        return self.mean + self.sd * rng.standard_normal(d)


@dataclass(frozen=True)
class FromPoints:
    """Start chain c at row c mod len(points)."""

    points: tuple

    def sample(self, rng, d, chain=0):
        P = np.asarray(self.points, dtype=float).reshape(len(self.points), -1)
        return P[chain % P.shape[0]].copy()


@dataclass(frozen=True)
class ChainConfig:
    eta: float
    steps_T: int
    num_chains: int = 1
    init: object = field(default_factory=Uniform)
    seed: int = 0
    d: int = 1
    record: str = "all"

    def __post_init__(self):
        if not (self.eta > 0 and np.isfinite(self.eta)):
            raise ValueError("eta must be positive")
        if self.steps_T < 1:
            raise ValueError("steps_T must be at least 1")
        if self.num_chains < 1:
            raise ValueError("num_chains must be at least 1")
        if self.record not in ("all", "final"):
            raise ValueError("record must be 'all' or 'final'")


def chain_rng(seed, chain) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[int(seed) & SEED_MASK, int(chain)]))


def default_eta(n, v, beta, scale=ETA_SCALE) -> float:
    """Step size eta = scale * n v / (n - beta)."""
    return scale * n * v / (n - beta)


def _initial(cfg, rng, chain):
    if isinstance(cfg.init, FromPoints):
        return cfg.init.sample(rng, cfg.d, chain)
    return np.asarray(cfg.init.sample(rng, cfg.d), dtype=float).reshape(cfg.d)


def _eval(score, X):
    out = np.asarray(score(X), dtype=float)
    return out.reshape(X.shape)


def _advance(score, X, noise, eta, chain0, step0, record):
    """Run len(noise[0]) steps on the chunk X (B, d); noise has shape (B, T, d)."""
    B, T, d = noise.shape
    keep = np.empty((B, T, d)) if record else None
    root = np.sqrt(2.0 * eta)
    for k in range(T):
        X = X + eta * _eval(score, X) + root * noise[:, k, :]
        if not np.all(np.isfinite(X)):
            bad = int(np.flatnonzero(~np.all(np.isfinite(X), axis=1))[0])
            raise NonFiniteState(
                f"non-finite state at step {step0 + k + 1} in chain {chain0 + bad}",
                step=step0 + k + 1,
                chain=chain0 + bad,
            )
        if record:
            keep[:, k, :] = X
    return X, keep


def run_lmc(score, cfg: ChainConfig) -> np.ndarray:
    """Trace of shape (num_chains, steps_T, d); with record='final', (num_chains, 1, d)."""
    return _run_levels([score], [cfg.eta], [cfg.steps_T], cfg)[0]


def annealed_step_sizes(eta, schedule: NoiseSchedule) -> list:
    """eta_k = eta * (sigma_k / sigma_last)^2, so the final level uses eta itself."""
    last = schedule.sigmas[-1]
    return [eta * (s / last) ** 2 for s in schedule.sigmas]


@dataclass
class AnnealedResult:
    trace: np.ndarray
    snapshots: list
    step_sizes: list
    initial: np.ndarray = None


def run_annealed(scores_per_level, schedule: NoiseSchedule, cfg: ChainConfig, step_sizes=None) -> AnnealedResult:
    """Sequential LMC phases, one per noise level, each continuing from the last state."""
    if len(scores_per_level) != len(schedule.sigmas):
        raise LengthMismatch(f"{len(scores_per_level)} score models for {len(schedule.sigmas)} noise levels")
    etas = list(step_sizes) if step_sizes is not None else annealed_step_sizes(cfg.eta, schedule)
    if len(etas) != len(schedule.sigmas):
        raise LengthMismatch("one step size per level is required")
    trace, snaps, init = _run_levels(list(scores_per_level), etas, list(schedule.steps_per_level), cfg)
    return AnnealedResult(trace, snaps, etas, init)


def _run_levels(scores, etas, steps, cfg):
    C, d = cfg.num_chains, cfg.d
    total = int(sum(steps))
    record = cfg.record == "all"
    trace = np.empty((C, total if record else 1, d))
    snaps = [np.empty((C, d)) for _ in scores]
    init = np.empty((C, d))
    for c0 in range(0, C, CHUNK):
        c1 = min(C, c0 + CHUNK)
        rngs = [chain_rng(cfg.seed, c) for c in range(c0, c1)]
        X = np.array([_initial(cfg, r, c) for r, c in zip(rngs, range(c0, c1))]).reshape(c1 - c0, d)
        init[c0:c1] = X
        pos = 0
        for lvl, (score, eta, T) in enumerate(zip(scores, etas, steps)):
            noise = np.stack([r.standard_normal((T, d)) for r in rngs])
            X, keep = _advance(score, X, noise, eta, c0, pos, record)
            if record:
                trace[c0:c1, pos:pos + T] = keep
            pos += T
            snaps[lvl][c0:c1] = X
        if not record:
            trace[c0:c1, 0] = X
    return trace, snaps, init


@dataclass(frozen=True)
class TargetDensity1D:
    """Piecewise-Gaussian density whose log-derivative is the closed-form score."""

    mu: float
    v: float
    n: int
    beta: float
    t: float
    breakpoints: np.ndarray
    slopes: np.ndarray
    intercepts: np.ndarray
    constants: np.ndarray

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        seg = np.searchsorted(self.breakpoints, x, side="right")
        return 0.5 * self.slopes[seg] * x * x + self.intercepts[seg] * x + self.constants[seg]

    def score(self, x):
        x = np.asarray(x, dtype=float)
        seg = np.searchsorted(self.breakpoints, x, side="right")
        return self.slopes[seg] * x + self.intercepts[seg]

    @property
    def interior_variance(self) -> float:
        return self.n * self.v / (self.n - self.beta)


def make_target_density(data: Dataset1D, beta, t=0.0, activation="relu") -> TargetDensity1D:
    """Integrate the closed-form score; branch constants make log pi continuous, with 0 at mu."""
    cfg = ArchitectureConfig(activation, False, beta)
    s = closed_form_score(data, cfg, t)
    a, b, bp = s.slopes, s.intercepts, s.breakpoints
    raw = lambda i, x: 0.5 * a[i] * x * x + b[i] * x
    consts = np.zeros(a.size)
    mid = int(np.searchsorted(bp, data.mu, side="right"))
    consts[mid] = -raw(mid, data.mu)
    for i in range(mid + 1, a.size):
        consts[i] = raw(i - 1, bp[i - 1]) + consts[i - 1] - raw(i, bp[i - 1])
    for i in range(mid - 1, -1, -1):
        consts[i] = raw(i + 1, bp[i]) + consts[i + 1] - raw(i, bp[i])
    return TargetDensity1D(data.mu, data.v, data.n, float(beta), float(t), bp, a, b, consts)


def target_density_unnormalized(x, target: TargetDensity1D):
    return np.exp(target.log_density(x))
