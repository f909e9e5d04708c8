"""Global sensitivity of weighted ERM estimates and output perturbation.

The released vector is ``theta_hat + zeta * z / ||z||`` with
``zeta ~ Gamma(shape=p, rate=epsilon/Delta)`` and ``z`` standard normal,
which has density proportional to ``exp(-(epsilon/Delta) * ||e||)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .core import ModelParams
from .errors import ConfigError, UsageError

__all__ = [
    "Observed",
    "EstimatedLargeN",
    "Conservative",
    "SensitivitySpec",
    "PrivacyBudget",
    "Rng",
    "as_generator",
    "sensitivity",
    "sample_sphere_noise",
    "privatize",
]


@dataclass(frozen=True)
class Observed:
    """Weights observed, or estimated on data independent of the sensitive set."""


@dataclass(frozen=True)
class EstimatedLargeN:
    """Weights estimated from the sensitive data itself (large-n bound).

    ``sigma_d`` defaults to the weight bound W, its upper bound.
    """

    k: float = 2.5
    r: float = 1.0
    sigma_d: Optional[float] = None

    def __post_init__(self):
        if not self.k >= 0:
            raise ConfigError(f"k must be >= 0, got {self.k!r}")
        if not 0 < self.r <= 1:
            raise ConfigError(f"effective sample-size fraction r must be in (0, 1], got {self.r!r}")
        if self.sigma_d is not None and not self.sigma_d > 0:
            raise ConfigError(f"sigma_d must be positive, got {self.sigma_d!r}")


@dataclass(frozen=True)
class Conservative:
    """Worst case ``C = n * W``."""

    n: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n!r}")


Mode = Union[Observed, EstimatedLargeN, Conservative]


@dataclass(frozen=True)
class SensitivitySpec:
    W: float
    gamma: float
    mode: Mode = field(default_factory=Observed)

    def __post_init__(self):
        if not (math.isfinite(self.W) and self.W > 0):
            raise ConfigError(f"weight bound W must be positive, got {self.W!r}")
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ConfigError(f"gamma must be positive, got {self.gamma!r}")
        if not isinstance(self.mode, (Observed, EstimatedLargeN, Conservative)):
            raise ConfigError(f"unknown sensitivity mode {self.mode!r}")

    @property
    def C(self) -> float:
        mode = self.mode
        if isinstance(mode, Observed):
            return 0.0
        if isinstance(mode, EstimatedLargeN):
            sigma_d = self.W if mode.sigma_d is None else mode.sigma_d
            return mode.k * mode.r ** -0.5 * sigma_d
        return mode.n * self.W


@dataclass(frozen=True)
class PrivacyBudget:
    """Pure epsilon-DP budget. ``math.inf`` means "no privacy" (identity release)."""

    epsilon: float

    def __post_init__(self):
        if math.isnan(self.epsilon) or not self.epsilon > 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon!r}")

    @property
    def is_private(self) -> bool:
        return math.isfinite(self.epsilon)


@dataclass(frozen=True)
class Rng:
    """Reproducible random stream identified by ``(seed, stream, path)``.

    Each call to :meth:`generator` restarts the stream, so two consumers
    holding the same ``Rng`` see the same draws. Parallel work derives
    children with :meth:`child` instead of sharing a generator.
    """

    seed: int
    stream: int = 0
    path: tuple = ()

    def __post_init__(self):
        for v in (self.seed, self.stream, *self.path):
            if not (0 <= int(v) < 2**64):
                raise ConfigError(f"seed and stream ids must be unsigned 64-bit integers, got {v!r}")

    def child(self, *keys: int) -> "Rng":
        return replace(self, path=self.path + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream), *map(int, self.path)))
        return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, Rng):
        return rng.generator()
    raise ConfigError(f"expected Rng or numpy Generator, got {type(rng).__name__}")


def sensitivity(spec: SensitivitySpec) -> float:
    """l2 global sensitivity ``(C + 2W) / gamma`` of the weighted ERM estimate."""
    return (spec.C + 2.0 * spec.W) / spec.gamma


def _draw_radius(gen: np.random.Generator, p: int) -> float:
    # Unit-rate Gamma(p); callers rescale by Delta/epsilon so that the same
    # stream yields radii exactly proportional to 1/epsilon.
    return float(gen.standard_gamma(p))


def _draw_direction(gen: np.random.Generator, p: int) -> np.ndarray:
    while True:
        z = gen.standard_normal(p)
        norm = np.linalg.norm(z)
        if norm > 0:
            return z / norm


def sample_sphere_noise(p: int, epsilon: float, delta_sens: float, rng) -> np.ndarray:
    """Draw a p-vector with density proportional to ``exp(-(epsilon/delta_sens) * ||e||)``."""
    if int(p) < 1:
        raise ConfigError(f"dimension p must be >= 1, got {p!r}")
    if not (math.isfinite(epsilon) and epsilon > 0):
        raise ConfigError(f"epsilon must be positive and finite, got {epsilon!r}")
    if not (math.isfinite(delta_sens) and delta_sens > 0):
        raise ConfigError(f"sensitivity must be positive and finite, got {delta_sens!r}")
    gen = as_generator(rng)
    radius = _draw_radius(gen, int(p)) * (delta_sens / epsilon)
    return radius * _draw_direction(gen, int(p))


def perturb(theta_hat: ModelParams, epsilon: float, delta_sens: float, rng) -> ModelParams:
    """Output perturbation at a precomputed sensitivity."""
    if theta_hat.privatized:
        raise UsageError("parameters are already privatized; refusing to add noise twice")
    if not math.isfinite(epsilon):
        return ModelParams(theta_hat.theta, privatized=False, releasable=True)
    noise = sample_sphere_noise(theta_hat.p, epsilon, delta_sens, rng)
    return ModelParams(theta_hat.theta + noise, privatized=True, releasable=True)


def privatize(theta_hat: ModelParams, spec: SensitivitySpec, budget: PrivacyBudget, rng) -> ModelParams:
    """Release ``theta_hat`` under ``budget.epsilon``-DP.

    With an infinite budget the estimate is returned unchanged and flagged
    non-private.

    Raises:
      UsageError: if ``theta_hat`` is already privatized.
    """
    return perturb(theta_hat, budget.epsilon, sensitivity(spec), rng)
