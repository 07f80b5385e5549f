"""Shared data model: datasets, architecture configuration, parameters."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, DomainError, DuplicatePoints, EmptyData, TooFewPoints

DUPLICATE_TOL = 1e-12
RANK_RTOL = 1e-10

ACTIVATIONS = ("relu", "abs")


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def sign(x):
    """Sign with the convention sign(0) = +1."""
    return np.where(np.asarray(x) >= 0, 1.0, -1.0)


def numerical_rank(X, rtol=RANK_RTOL):
    s = np.linalg.svd(np.atleast_2d(X), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


@dataclass(frozen=True)
class Dataset1D:
    points: np.ndarray
    mu: float
    v: float

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def centered(self) -> np.ndarray:
        return self.points - self.mu


@dataclass(frozen=True)
class DatasetND:
    X: np.ndarray
    rank_r: int

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def make_dataset_1d(raw) -> Dataset1D:
    x = np.asarray(raw, dtype=float).ravel()
    if x.size < 2:
        raise TooFewPoints(f"need at least 2 points, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DomainError("non-finite sample")
    x = np.sort(x)
    gaps = np.diff(x)
    if np.any(gaps <= DUPLICATE_TOL):
        i = int(np.argmin(gaps))
        raise DuplicatePoints(f"points {x[i]!r} and {x[i + 1]!r} coincide within {DUPLICATE_TOL}")
    mu = float(x.mean())
    v = float(np.mean((x - mu) ** 2))
    return Dataset1D(points=_frozen(x), mu=mu, v=v)


def make_dataset_nd(raw) -> DatasetND:
    X = np.asarray(raw, dtype=float)
    if X.size == 0:
        raise EmptyData("empty data matrix")
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D array, got shape {X.shape}")
    return DatasetND(X=_frozen(X), rank_r=numerical_rank(X))


@dataclass(frozen=True)
class ArchitectureConfig:
    activation: str = "relu"
    skip: bool = False
    beta: float = 1.0
    m_hint: int | None = None

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")

    @property
    def variant(self) -> str:
        return {
            ("relu", False): "relu_noskip",
            ("abs", False): "abs_noskip",
            ("relu", True): "relu_skip",
            ("abs", True): "abs_skip",
        }[(self.activation, self.skip)]


@dataclass(frozen=True)
class NoiseSchedule:
    sigmas: tuple
    steps_per_level: tuple

    def __post_init__(self):
        s = np.asarray(self.sigmas, dtype=float)
        if s.size == 0 or np.any(s <= 0) or np.any(np.diff(s) >= 0):
            raise ValueError("sigmas must be positive and strictly decreasing")
        if len(self.steps_per_level) != s.size or min(self.steps_per_level) < 1:
            raise ValueError("steps_per_level must give a positive count per level")
        object.__setattr__(self, "sigmas", tuple(float(v) for v in s))
        object.__setattr__(self, "steps_per_level", tuple(int(k) for k in self.steps_per_level))

    @classmethod
    def geometric(cls, hi, lo, levels, steps):
        return cls(tuple(np.geomspace(hi, lo, levels)), (steps,) * levels)

    @classmethod
    def linear(cls, hi, lo, levels, steps):
        return cls(tuple(np.linspace(hi, lo, levels)), (steps,) * levels)


@dataclass
class TwoLayerParams:
    """Weights of s(x) = W2 act(W1 x + b1) + V x + b2.

    Shapes: W1 (m, d), b1 (m,), W2 (d, m), b2 (d,), V (d, d).
    """

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    V: np.ndarray
    activation: str = "relu"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.W1 = np.atleast_2d(np.asarray(self.W1, dtype=float))
        m, d = self.W1.shape
        self.b1 = np.asarray(self.b1, dtype=float).reshape(m)
        self.W2 = np.asarray(self.W2, dtype=float).reshape(d, m)
        self.b2 = np.asarray(self.b2, dtype=float).reshape(d)
        self.V = np.asarray(self.V, dtype=float).reshape(d, d)
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def m(self) -> int:
        return self.W1.shape[0]

    @property
    def d(self) -> int:
        return self.W1.shape[1]

    @classmethod
    def zeros(cls, m, d=1, activation="relu"):
        return cls(np.zeros((m, d)), np.zeros(m), np.zeros((d, m)), np.zeros(d), np.zeros((d, d)), activation)

    def copy(self) -> "TwoLayerParams":
        return TwoLayerParams(self.W1.copy(), self.b1.copy(), self.W2.copy(), self.b2.copy(),
                              self.V.copy(), self.activation, dict(self.meta))

    def pruned(self) -> "TwoLayerParams":
        """Copy without neurons whose input or output weights are all zero (same function)."""
        live = np.any(self.W1 != 0, axis=1) & np.any(self.W2 != 0, axis=0)
        # a dead-input neuron still emits act(b1) * W2, which is folded into the output bias
        dead_in = ~np.any(self.W1 != 0, axis=1)
        b2 = self.b2 + self.W2[:, dead_in] @ activate(self.b1[dead_in], self.activation)
        return TwoLayerParams(self.W1[live], self.b1[live], self.W2[:, live], b2, self.V.copy(),
                              self.activation, dict(self.meta))

    def to_dict(self) -> dict:
        return {
            "activation": self.activation,
            "W1": self.W1.tolist(),
            "b1": self.b1.tolist(),
            "W2": self.W2.tolist(),
            "b2": self.b2.tolist(),
            "V": self.V.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "TwoLayerParams":
        return cls(d["W1"], d["b1"], d["W2"], d["b2"], d["V"], d.get("activation", "relu"))


def activate(z, activation):
    if activation == "relu":
        return np.maximum(z, 0.0)
    return np.abs(z)


def activation_slope(z, activation):
    """Derivative of the activation with the sign(0)=+1 convention."""
    if activation == "relu":
        return (np.asarray(z) >= 0).astype(float)
    return sign(z)


def evaluate_network(params: TwoLayerParams, x_test) -> np.ndarray:
    """Forward pass. 1-D inputs of shape (t,) return shape (t,)."""
    x = np.asarray(x_test, dtype=float)
    flat = x.ndim <= 1 and params.d == 1
    X = x.reshape(-1, 1) if flat else np.atleast_2d(x)
    if X.shape[1] != params.d:
        raise DimensionMismatch(f"inputs have dimension {X.shape[1]}, network expects {params.d}")
    H = activate(X @ params.W1.T + params.b1, params.activation)
    out = H @ params.W2.T + X @ params.V.T + params.b2
    return out[:, 0] if flat else out


def read_csv_matrix(path) -> np.ndarray:
    data = np.loadtxt(Path(path), delimiter=",", ndmin=2, encoding="utf-8")
    return data


def load_dataset_1d(path) -> Dataset1D:
    return make_dataset_1d(read_csv_matrix(path)[:, 0])


def load_dataset_nd(path) -> DatasetND:
    return make_dataset_nd(read_csv_matrix(path))

