"""Two-dimensional spiral demo: per-level wedge predictors plus annealed Langevin.

For each noise level sigma the clean points are replicated ``copies`` times
and perturbed, x = x_clean + sigma * delta, with regression labels
l = -delta / sigma (the score of the Gaussian perturbation kernel). The
predictor at each level is a group-lasso fit on bias-augmented wedge
features whose generator rows are the first ``anchors`` noisy rows. Samples
start from a wide uniform box and are refined level by level.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import NoiseSchedule
from .dsmnd import build_wedge_features, fit_wedge_dsm, predict_wedge_score
from .prox import Status
from .samplers import ChainConfig, Uniform, run_annealed

SPIRAL_SIGMAS = (0.5, 0.1, 0.05, 0.03, 0.01)
SPIRAL_STEPS = (5, 5, 5, 5, 15)


def make_spiral(n=100, turns=1.5, r0=0.5, r1=2.5) -> np.ndarray:
    """n points on an Archimedean spiral, radius r0 -> r1 over ``turns`` revolutions."""
    theta = np.linspace(0.0, 2 * np.pi * turns, n)
    r = r0 + (r1 - r0) * theta / theta[-1]
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def mean_nearest_distance(samples, reference) -> float:
    return float(nearest_distances(samples, reference).mean())


def nearest_distances(samples, reference) -> np.ndarray:
    S = np.asarray(samples, dtype=float)
    R = np.asarray(reference, dtype=float)
    d2 = ((S[:, None, :] - R[None, :, :]) ** 2).sum(axis=-1)
    return np.sqrt(d2.min(axis=1))


@dataclass
class SpiralConfig:
    n_points: int = 100
    sigmas: tuple = SPIRAL_SIGMAS
    steps: tuple = SPIRAL_STEPS
    num_samples: int = 500
    copies: int = 5
    anchors: int = 100
    lambda_fraction: float = 1e-3
    step_constant: float = 1.0
    max_iters: int = 2000
    init_lo: float = -10.0
    init_hi: float = 10.0
    seed: int = 0

    def __post_init__(self):
        self.sigmas = tuple(float(s) for s in self.sigmas)
        self.steps = tuple(int(s) for s in self.steps)
        if self.copies < 1 or self.anchors < 2 or self.num_samples < 1:
            raise ValueError("copies >= 1, anchors >= 2 and num_samples >= 1 are required")

    @property
    def final_eta(self) -> float:
        """Step size at the last level, eta = c * sigma_last^2."""
        return self.step_constant * self.sigmas[-1] ** 2

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LevelModel:
    sigma: float
    features: object = field(repr=False)
    Z: np.ndarray = field(repr=False)
    lam: float = 0.0
    kkt: float = float("nan")
    status: str = ""
    iterations: int = 0

    def __call__(self, x):
        return predict_wedge_score(self.Z, self.features, x_test=x)

    def summary(self) -> dict:
        return {"sigma": self.sigma, "lambda": self.lam, "columns": self.features.c,
                "nonzero_groups": int(np.count_nonzero(np.linalg.norm(self.Z, axis=1))),
                "kkt": self.kkt, "status": self.status, "iterations": self.iterations}


@dataclass
class SpiralResult:
    clean: np.ndarray
    models: list
    snapshots: list
    distances: list
    step_sizes: list
    fit_seconds: float
    sample_seconds: float
    initial_distance: float = float("nan")

    @property
    def final_distance(self) -> float:
        return self.distances[-1]

    @property
    def decreasing_transitions(self) -> int:
        """Decreases along initial state -> level 1 -> ... -> last level."""
        return monotone_transitions([self.initial_distance, *self.distances])


def fit_level(clean, sigma, cfg: SpiralConfig, rng) -> LevelModel:
    Xc = np.tile(clean, (cfg.copies, 1))
    delta = rng.standard_normal(Xc.shape)
    noisy = Xc + sigma * delta
    labels = -delta / sigma
    feats = build_wedge_features(noisy, 2, augment_bias=True, anchors=noisy[: cfg.anchors])
    lam = cfg.lambda_fraction * float(np.linalg.norm(feats.K.T @ labels, axis=1).max())
    Z, sol = fit_wedge_dsm(feats, labels, lam, max_iters=cfg.max_iters, full_output=True)
    return LevelModel(sigma, feats, Z, lam, sol.kkt_residual, Status(sol.status).value, sol.iterations)


def run_spiral(cfg: SpiralConfig | None = None) -> SpiralResult:
    cfg = cfg or SpiralConfig()
    clean = make_spiral(cfg.n_points)
    rng = np.random.default_rng(cfg.seed)
    t0 = time.perf_counter()
    models = [fit_level(clean, s, cfg, rng) for s in cfg.sigmas]
    t1 = time.perf_counter()
    schedule = NoiseSchedule(cfg.sigmas, cfg.steps)
    chains = ChainConfig(cfg.final_eta, 1, cfg.num_samples, Uniform(cfg.init_lo, cfg.init_hi), cfg.seed, 2, "final")
    res = run_annealed(models, schedule, chains)
    t2 = time.perf_counter()
    dists = [mean_nearest_distance(s, clean) for s in res.snapshots]
    start = mean_nearest_distance(res.initial, clean)
    return SpiralResult(clean, models, res.snapshots, dists, res.step_sizes, t1 - t0, t2 - t1, start)


def monotone_transitions(values) -> int:
    return int(sum(b < a for a, b in zip(values[:-1], values[1:])))
