"""Outcome weighted learning as a weighted ERM, with private release.

Treatment ``A`` plays the role of the label and ``B / P(A|x)`` the role of
the weight. The learned rule assigns ``+1`` when ``x @ theta > 0`` and ``-1``
otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .core import Dataset, LossSpec, ModelParams, clip_and_normalize, penalty_coef, scale_features
from .errors import ConfigError, DataError, NoMatchError
from .privacy import Observed, SensitivitySpec, perturb, sensitivity
from .solver import SolverConfig, fit_werm

__all__ = [
    "TrialRecord",
    "TrialData",
    "OwlConfig",
    "OwlFit",
    "shift_benefits",
    "compute_weights",
    "assign",
    "assign_many",
    "empirical_value",
    "preprocess_features",
    "fit_dp_owl",
]

SHIFT_OFFSET = 0.001


@dataclass(frozen=True)
class TrialRecord:
    x: tuple
    A: int
    B: float
    propensity: float = 0.5


@dataclass(frozen=True, eq=False)
class TrialData:
    """Column-oriented trial records ``(x_i, A_i, B_i, P(A_i | x_i))``."""

    x: np.ndarray
    A: np.ndarray
    B: np.ndarray
    propensity: np.ndarray = None

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        A = np.asarray(self.A, dtype=float).reshape(-1)
        B = np.asarray(self.B, dtype=float).reshape(-1)
        n = x.shape[0]
        P = np.full(n, 0.5) if self.propensity is None else np.asarray(self.propensity, dtype=float).reshape(-1)
        if A.shape[0] != n or B.shape[0] != n or P.shape[0] != n:
            raise DataError(f"length mismatch: x has {n} rows, A {A.shape[0]}, B {B.shape[0]}, P {P.shape[0]}")
        if n == 0:
            raise DataError("trial data is empty")
        if not np.all(np.isin(A, (-1.0, 1.0))):
            raise DataError("treatments A must be in {-1, +1}")
        if not np.all((P > 0) & (P < 1)):
            raise DataError("propensities must lie strictly between 0 and 1")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(B))):
            raise DataError("features and benefits must be finite")
        for name, arr in (("x", x), ("A", A), ("B", B), ("propensity", P)):
            object.__setattr__(self, name, arr)

    def __len__(self):
        return self.x.shape[0]

    @classmethod
    def from_records(cls, records: Sequence[TrialRecord]) -> "TrialData":
        if not records:
            raise DataError("no records")
        return cls(
            x=[r.x for r in records],
            A=[r.A for r in records],
            B=[r.B for r in records],
            propensity=[r.propensity for r in records],
        )

    def subset(self, idx) -> "TrialData":
        idx = np.asarray(idx)
        return TrialData(self.x[idx], self.A[idx], self.B[idx], self.propensity[idx])

    def with_benefits(self, B) -> "TrialData":
        return TrialData(self.x, self.A, B, self.propensity)


@dataclass(frozen=True)
class OwlConfig:
    """Hyperparameters of a private OWL fit.

    ``feature_bounds`` is a ``(lower, upper)`` pair (scalars or per-column)
    known independently of the sensitive data; ``features`` optionally picks
    the columns of ``x`` that enter the model. The default ``half_squared``
    penalty is exactly 1-strongly convex, which is what makes the released
    sensitivity ``(C + 2W) / gamma`` tight.
    """

    gamma: float
    epsilon: float
    weight_bound: float = 30.0
    huber_h: float = 0.5
    benefit_clip: float = 15.0
    feature_bounds: tuple = (0.0, 1.0)
    features: Optional[tuple] = None
    sensitivity_mode: object = field(default_factory=Observed)
    propensity_floor: Optional[float] = None
    penalty: str = "half_squared"
    solver: SolverConfig = SolverConfig()

    def __post_init__(self):
        for name in ("gamma", "weight_bound", "huber_h", "benefit_clip"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive and finite, got {v!r}")
        if math.isnan(self.epsilon) or not self.epsilon > 0:
            raise ConfigError(f"epsilon must be positive (inf for no privacy), got {self.epsilon!r}")
        penalty_coef(self.penalty)
        if self.propensity_floor is not None:
            if not 0 < self.propensity_floor < 1:
                raise ConfigError("propensity_floor must be in (0, 1)")
            need = self.benefit_clip / self.propensity_floor
            if self.weight_bound < need * (1 - 1e-12):
                raise ConfigError(
                    f"weight_bound {self.weight_bound} < benefit_clip / propensity_floor = {need}"
                )


class OwlFit(NamedTuple):
    theta_hat: ModelParams
    theta_star: ModelParams
    delta_sens: float


def shift_benefits(B) -> np.ndarray:
    """Shift benefits up by ``|min B| + 0.001`` when any is negative."""
    B = np.asarray(B, dtype=float).reshape(-1)
    if B.size == 0:
        raise DataError("cannot shift an empty benefit sequence")
    lo = B.min()
    if lo < 0:
        return B + abs(lo) + SHIFT_OFFSET
    return B.copy()


def compute_weights(B, propensity, W: float, C_B: float) -> np.ndarray:
    """OWL weights ``min(B, C_B) / P`` clipped above at ``W``.

    Raises:
      DataError: on a non-positive benefit; run :func:`shift_benefits` first.
    """
    B = np.asarray(B, dtype=float).reshape(-1)
    P = np.broadcast_to(np.asarray(propensity, dtype=float), B.shape)
    bad = np.flatnonzero(~(B > 0))
    if bad.size:
        raise DataError(f"benefits must be positive (shift first); violated at indices {bad[:10].tolist()}")
    if not np.all((P > 0) & (P < 1)):
        raise DataError("propensities must lie strictly between 0 and 1")
    return np.minimum(np.minimum(B, C_B) / P, W)


def _theta(theta):
    return theta.theta if isinstance(theta, ModelParams) else np.asarray(theta, dtype=float).reshape(-1)


def assign_many(theta, x_scaled) -> np.ndarray:
    """Vectorized :func:`assign` over the rows of ``x_scaled``."""
    t = _theta(theta)
    x = np.atleast_2d(np.asarray(x_scaled, dtype=float))
    if x.shape[1] != t.shape[0]:
        raise DataError(f"features have {x.shape[1]} columns but theta has length {t.shape[0]}")
    return np.where(x @ t > 0, 1, -1)


def assign(theta, x_scaled) -> int:
    """Treatment for one scaled feature vector; a zero score maps to -1."""
    x = np.asarray(x_scaled, dtype=float).reshape(-1)
    return int(assign_many(theta, x[None, :])[0])


def empirical_value(theta, records: TrialData, x_scaled) -> float:
    """Inverse-propensity weighted mean benefit over records the rule agrees with.

    Raises:
      NoMatchError: when no record's treatment matches the rule.
    """
    T = assign_many(theta, x_scaled)
    if T.shape[0] != len(records):
        raise DataError("scaled features and records differ in length")
    match = records.A == T
    if not np.any(match):
        raise NoMatchError("no record received the treatment assigned by the rule")
    inv = 1.0 / records.propensity[match]
    return float(inv @ records.B[match] / inv.sum())


def preprocess_features(x, cfg: OwlConfig) -> np.ndarray:
    """Select, clip to public bounds, map to [0, 1], append bias and scale."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if cfg.features is not None:
        x = x[:, list(cfg.features)]
    lo, hi = cfg.feature_bounds
    return scale_features(clip_and_normalize(x, lo, hi), add_bias=True)


def fit_dp_owl(records: TrialData, cfg: OwlConfig, rng, x_scaled=None) -> OwlFit:
    """Fit a Huber-smoothed OWL model and release it under ``cfg.epsilon``-DP.

    Pipeline: shift benefits, compute clipped weights, clip and scale
    features (bias appended), solve the weighted ERM, perturb the output.
    ``theta_hat`` is returned for testing only and is marked non-releasable
    whenever the budget is finite. ``x_scaled`` may be supplied to skip
    feature preprocessing when the caller already holds it.
    """
    B = shift_benefits(records.B)
    w = compute_weights(B, records.propensity, cfg.weight_bound, cfg.benefit_clip)
    x = preprocess_features(records.x, cfg) if x_scaled is None else x_scaled
    data = Dataset(x, records.A, w, cfg.weight_bound)
    raw = fit_werm(data, cfg.gamma, LossSpec("huber", cfg.huber_h), cfg.solver, cfg.penalty)
    private = math.isfinite(cfg.epsilon)
    theta_hat = ModelParams(raw.theta, privatized=False, releasable=not private)
    spec = SensitivitySpec(cfg.weight_bound, cfg.gamma, cfg.sensitivity_mode)
    delta = sensitivity(spec)
    theta_star = perturb(ModelParams(raw.theta), cfg.epsilon, delta, rng)
    return OwlFit(theta_hat, theta_star, delta)
