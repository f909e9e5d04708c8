"""Domain types, the smoothed hinge (Huber) loss and the weighted ERM objective.

Every learner in the package minimizes an objective of the form

    (1/n) * sum_i w_i * huber(y_i * x_i @ theta) + (gamma/n) * c * ||theta||^2

over a linear predictor with the bias folded into ``x`` as a constant column.
The penalty coefficient ``c`` is 1 for ``penalty="squared"`` and 1/2 for
``penalty="half_squared"``; the latter makes the regularizer exactly
1-strongly convex, so ``2W/gamma`` is a tight sensitivity bound rather than
one that is conservative by a factor of two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, DomainError

__all__ = [
    "Dataset",
    "LossSpec",
    "ModelParams",
    "huber_loss",
    "huber_grad",
    "huber_curvature",
    "clip_and_normalize",
    "scale_features",
    "werm_objective",
    "werm_gradient",
    "werm_hessian",
    "PENALTIES",
]

NORM_SLACK = 1e-12
PENALTIES = {"squared": 1.0, "half_squared": 0.5}


def penalty_coef(penalty):
    try:
        return PENALTIES[penalty]
    except KeyError:
        raise ConfigError(f"unknown penalty {penalty!r}; expected one of {sorted(PENALTIES)}") from None


def _check_h(h):
    if not (isinstance(h, (int, float, np.floating)) and math.isfinite(h) and h > 0):
        raise ConfigError(f"Huber parameter h must be a positive finite number, got {h!r}")


def _as_z(z):
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DataError("Huber loss argument must be finite")
    return arr


def _unwrap(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def huber_loss(z, h=0.5):
    """Smoothed hinge loss of a margin ``z``.

    Zero above ``1 + h``, linear ``1 - z`` below ``1 - h`` and the quadratic
    ``(1 + h - z)^2 / (4h)`` in between. Accepts scalars or arrays.
    """
    _check_h(h)
    z_arr = _as_z(z)
    out = np.where(
        z_arr > 1.0 + h,
        0.0,
        np.where(z_arr < 1.0 - h, 1.0 - z_arr, (1.0 + h - z_arr) ** 2 / (4.0 * h)),
    )
    return _unwrap(out, z)


def huber_grad(z, h=0.5):
    """Derivative of :func:`huber_loss` with respect to ``z``; always in [-1, 0]."""
    _check_h(h)
    z_arr = _as_z(z)
    out = np.where(
        z_arr > 1.0 + h,
        0.0,
        np.where(z_arr < 1.0 - h, -1.0, -(1.0 + h - z_arr) / (2.0 * h)),
    )
    return _unwrap(out, z)


def huber_curvature(z, h=0.5):
    """Generalized second derivative: ``1/(2h)`` on the quadratic piece, else 0."""
    _check_h(h)
    z_arr = _as_z(z)
    out = np.where(np.abs(1.0 - z_arr) <= h, 1.0 / (2.0 * h), 0.0)
    return _unwrap(out, z)


@dataclass(frozen=True)
class LossSpec:
    kind: str = "huber"
    h: float = 0.5

    def __post_init__(self):
        if self.kind != "huber":
            raise ConfigError(f"unsupported loss kind {self.kind!r}; only 'huber' is available")
        _check_h(self.h)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature-label-weight triples with ``||x_i|| <= 1`` and ``0 < w_i <= W``."""

    features: np.ndarray
    labels: np.ndarray
    weights: np.ndarray
    weight_bound: float

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.features, dtype=float))
        y = np.asarray(self.labels, dtype=float).reshape(-1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "weights", w)
        n, p = x.shape
        if n < 1 or p < 1:
            raise DataError(f"dataset needs n >= 1 and p >= 1, got shape {x.shape}")
        if y.shape[0] != n or w.shape[0] != n:
            raise DataError(
                f"length mismatch: {n} feature rows, {y.shape[0]} labels, {w.shape[0]} weights"
            )
        if not (math.isfinite(self.weight_bound) and self.weight_bound > 0):
            raise ConfigError(f"weight bound W must be positive and finite, got {self.weight_bound!r}")
        if not np.all(np.isfinite(x)):
            raise DataError("features contain non-finite values")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise DataError("labels must be in {-1, +1}")
        norms = np.linalg.norm(x, axis=1)
        bad = np.flatnonzero(norms > 1.0 + NORM_SLACK)
        if bad.size:
            raise DomainError(f"feature rows exceed unit norm at indices {bad[:10].tolist()}", bad)
        bad = np.flatnonzero(~((w > 0) & (w <= self.weight_bound)))
        if bad.size:
            raise DomainError(
                f"weights must lie in (0, {self.weight_bound}], violated at indices {bad[:10].tolist()}",
                bad,
            )

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def p(self):
        return self.features.shape[1]


@dataclass(frozen=True, eq=False)
class ModelParams:
    """A linear predictor's coefficients, raw or privatized.

    ``releasable`` is False for raw estimates fitted under a finite privacy
    budget; such vectors must not leave the process.
    """

    theta: np.ndarray
    privatized: bool = False
    releasable: bool = field(default=True)

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float).reshape(-1)
        if not np.all(np.isfinite(theta)):
            raise DataError("model parameters must be finite")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def p(self):
        return self.theta.shape[0]


def clip_and_normalize(raw, lower, upper):
    """Clip each column to ``[lower, upper]`` and map it affinely onto [0, 1].

    Bounds must come from public knowledge, never from the data being clipped.
    """
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    lower = np.broadcast_to(np.asarray(lower, dtype=float), (raw.shape[1],))
    upper = np.broadcast_to(np.asarray(upper, dtype=float), (raw.shape[1],))
    if np.any(upper <= lower):
        raise ConfigError("every feature upper bound must exceed its lower bound")
    return (np.clip(raw, lower, upper) - lower) / (upper - lower)


def scale_features(raw, add_bias=True):
    """Divide rows of a [0, 1]-valued matrix by ``sqrt(p)`` so each has norm <= 1.

    With ``add_bias`` a constant column of ones is appended first, so ``p = d + 1``.

    Raises:
      DomainError: if any entry lies outside [0, 1]; ``indices`` holds the
        offending (row, column) pairs.
    """
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    outside = ~((raw >= 0.0) & (raw <= 1.0))
    if np.any(outside):
        idx = [tuple(map(int, rc)) for rc in np.argwhere(outside)]
        raise DomainError(f"feature entries outside [0, 1] at (row, col) {idx[:10]}", idx)
    if add_bias:
        raw = np.hstack([raw, np.ones((raw.shape[0], 1))])
    return raw / math.sqrt(raw.shape[1])


def _margins(theta, data):
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != data.p:
        raise DataError(f"theta has length {theta.shape[0]} but data has p={data.p}")
    return theta, data.labels * (data.features @ theta)


def _check_gamma(gamma):
    if not (math.isfinite(gamma) and gamma > 0):
        raise ConfigError(f"regularization constant gamma must be positive, got {gamma!r}")


def werm_objective(
    theta, data: Dataset, gamma: float, loss: LossSpec = LossSpec(), penalty: str = "squared"
) -> float:
    _check_gamma(gamma)
    c = penalty_coef(penalty)
    theta, z = _margins(theta, data)
    n = data.n
    return float(data.weights @ huber_loss(z, loss.h) / n + c * gamma / n * (theta @ theta))


def werm_gradient(
    theta, data: Dataset, gamma: float, loss: LossSpec = LossSpec(), penalty: str = "squared"
) -> np.ndarray:
    _check_gamma(gamma)
    c = penalty_coef(penalty)
    theta, z = _margins(theta, data)
    n = data.n
    coef = data.weights * data.labels * huber_grad(z, loss.h)
    return data.features.T @ coef / n + 2.0 * c * gamma / n * theta


def werm_hessian(
    theta, data: Dataset, gamma: float, loss: LossSpec = LossSpec(), penalty: str = "squared"
) -> np.ndarray:
    """Generalized Hessian; the objective is only once differentiable at ``z = 1 +- h``."""
    _check_gamma(gamma)
    c = penalty_coef(penalty)
    theta, z = _margins(theta, data)
    n = data.n
    curv = data.weights * huber_curvature(z, loss.h)
    x = data.features
    return (x.T * curv) @ x / n + 2.0 * c * gamma / n * np.eye(data.p)
