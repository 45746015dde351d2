"""Problem-instance generation for the shuffled linear model y = Pi(X b) + w.

X has iid standard normal entries and w iid N(0, sigma^2), with
sigma = ||b|| / sqrt(SNR).  All randomness flows through numpy's
``Generator`` seeded with PCG64 (ziggurat normals), so a (config, seed)
pair reproduces an instance bit for bit on a fixed numpy version.
Draw order is fixed: X, then the coefficient direction (sphere mode only),
then the permutation, then w.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InvalidArgumentError
from .perm import Permutation, sample_uniform

BETA_DIRECTIONS = ("e1", "sphere")
PI_LAWS = ("uniform", "identity", "fixed")


@dataclass(frozen=True)
class ModelConfig:
    """Generation parameters; SNR given directly or as an exponent c (SNR = n^c).

    ``snr=math.inf`` is the exact noiseless mode (sigma = 0).
    """

    n: int
    d: int
    snr: float | None = None
    snr_exponent: float | None = None
    beta_norm: float = 1.0
    beta_direction: str = "e1"
    pi_law: str = "uniform"
    pi_fixed: Permutation | None = None

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise InvalidArgumentError("n and d must be >= 1")
        if self.d > self.n:
            raise DimensionError(f"d={self.d} exceeds n={self.n}; least squares needs n >= d")
        if (self.snr is None) == (self.snr_exponent is None):
            raise InvalidArgumentError("exactly one of snr / snr_exponent must be set")
        if self.snr is not None and not self.snr > 0:
            raise InvalidArgumentError(f"snr must be positive, got {self.snr}")
        if self.beta_norm <= 0:
            raise InvalidArgumentError("beta_norm must be positive")
        if self.beta_direction not in BETA_DIRECTIONS:
            raise InvalidArgumentError(f"beta_direction must be one of {BETA_DIRECTIONS}")
        if self.pi_law not in PI_LAWS:
            raise InvalidArgumentError(f"pi_law must be one of {PI_LAWS}")
        if (self.pi_law == "fixed") != (self.pi_fixed is not None):
            raise InvalidArgumentError("pi_fixed is required iff pi_law='fixed'")
        if self.pi_fixed is not None and self.pi_fixed.n != self.n:
            raise DimensionError("pi_fixed size does not match n")
        if not self.resolved_snr() > 0:
            raise InvalidArgumentError("resolved SNR must be positive")

    def resolved_snr(self) -> float:
        if self.snr is not None:
            return float(self.snr)
        return float(self.n) ** float(self.snr_exponent)

    def sigma(self) -> float:
        snr = self.resolved_snr()
        if math.isinf(snr):
            return 0.0
        return self.beta_norm / math.sqrt(snr)


@dataclass(frozen=True)
class Instance:
    """One generated problem: observed (X, y) plus the ground truth that made it."""

    n: int
    d: int
    X: np.ndarray
    beta_star: np.ndarray
    pi_star: Permutation
    sigma: float
    w: np.ndarray
    y: np.ndarray
    seed: int = field(default=0)

    def __post_init__(self):
        if self.d > self.n:
            raise DimensionError(f"d={self.d} exceeds n={self.n}")
        if self.X.shape != (self.n, self.d):
            raise DimensionError("X shape does not match (n, d)")

    def reconstruct_y(self) -> np.ndarray:
        return self.pi_star.apply(self.X @ self.beta_star) + self.w

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "seed": int(self.seed),
            "sigma": self.sigma,
            "beta_star": self.beta_star.tolist(),
            "pi_star": self.pi_star.to_one_based(),
            "X": self.X.tolist(),
            "w": self.w.tolist(),
            "y": self.y.tolist(),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Instance":
        return cls(
            n=int(doc["n"]),
            d=int(doc["d"]),
            X=np.asarray(doc["X"], dtype=float),
            beta_star=np.asarray(doc["beta_star"], dtype=float),
            pi_star=Permutation.from_one_based(doc["pi_star"]),
            sigma=float(doc["sigma"]),
            w=np.asarray(doc["w"], dtype=float),
            y=np.asarray(doc["y"], dtype=float),
            seed=int(doc.get("seed", 0)),
        )


def generate(config: ModelConfig, seed: int) -> Instance:
    """Draw one instance; identical (config, seed) pairs are bit-identical."""
    rng = np.random.default_rng(seed)
    n, d = config.n, config.d

    X = rng.standard_normal((n, d))

    if config.beta_direction == "e1":
        direction = np.zeros(d)
        direction[0] = 1.0
    else:
        direction = rng.standard_normal(d)
        direction /= np.linalg.norm(direction)
    beta_star = config.beta_norm * direction

    if config.pi_law == "uniform":
        pi_star = sample_uniform(n, rng)
    elif config.pi_law == "identity":
        pi_star = Permutation.identity(n)
    else:
        pi_star = config.pi_fixed

    sigma = config.sigma()
    w = sigma * rng.standard_normal(n) if sigma > 0 else np.zeros(n)
    y = pi_star.apply(X @ beta_star) + w
    return Instance(n=n, d=d, X=X, beta_star=beta_star, pi_star=pi_star,
                    sigma=sigma, w=w, y=y, seed=int(seed))


def snr_of(instance: Instance) -> float:
    """||beta_star||^2 / sigma^2; +inf in the noiseless mode."""
    if instance.sigma == 0:
        return math.inf
    return float(np.dot(instance.beta_star, instance.beta_star)) / instance.sigma**2


def save_instance(instance: Instance, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(instance.to_json_dict(), f)


def load_instance(path) -> Instance:
    with open(path, encoding="utf-8") as f:
        return Instance.from_json_dict(json.load(f))


def config_from_json_dict(doc: dict) -> ModelConfig:
    pi_fixed = doc.get("pi_fixed")
    return ModelConfig(
        n=int(doc["n"]),
        d=int(doc["d"]),
        snr=doc.get("snr"),
        snr_exponent=doc.get("snr_exponent"),
        beta_norm=float(doc.get("beta_norm", 1.0)),
        beta_direction=doc.get("beta_direction", "e1"),
        pi_law=doc.get("pi_law", "uniform"),
        pi_fixed=Permutation.from_one_based(pi_fixed) if pi_fixed is not None else None,
    )
