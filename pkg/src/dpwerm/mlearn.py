"""Matched learning (M-learning) with a Huber surrogate and private release.

Each subject is compared with its nearest opposite-arm neighbours. A pair
``(i, j)`` contributes ``g(|Bt_i - Bt_j|) * huber(z_ij) / |M_i|`` where
``Bt`` is a residualized benefit and ``z_ij = A_i * s_ij * x_i @ theta``.
The sign ``s_ij`` is ``sign(Bt_i - Bt_j)`` by default; ``sign_mode="abs"``
switches to ``sign(|Bt_i - Bt_j|)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .core import ModelParams, huber_curvature, huber_grad, huber_loss, penalty_coef, NORM_SLACK
from .errors import ConfigError, DataError, DomainError
from .owl import TrialData
from .privacy import perturb
from .solver import SolverConfig, minimize

__all__ = [
    "MatchedSets",
    "MlearnConfig",
    "Residuals",
    "residualize",
    "build_matches",
    "mlearn_objective",
    "mlearn_gradient",
    "mlearn_hessian",
    "fit_mlearn",
    "mlearn_sensitivity",
    "privatize_mlearn",
]

G_KINDS = ("constant_one", "identity")
RESIDUALIZERS = ("none", "linear_ols")
SIGN_MODES = ("signed", "abs")
DEFAULT_SUP_G_IDENTITY = 6.0


@dataclass(frozen=True, eq=False)
class MatchedSets:
    """``sets[i]`` holds the opposite-arm indices matched to subject ``i``."""

    sets: tuple
    m: int

    def __post_init__(self):
        if int(self.m) < 1:
            raise ConfigError(f"match size m must be >= 1, got {self.m!r}")
        sets = tuple(np.asarray(s, dtype=np.intp).reshape(-1) for s in self.sets)
        for i, s in enumerate(sets):
            if s.size == 0:
                raise DataError(f"matched set of subject {i} is empty")
        object.__setattr__(self, "sets", sets)

    def __len__(self):
        return len(self.sets)

    def pairs(self):
        """Flattened ``(i, j, 1/|M_i|)`` arrays over every matched pair."""
        sizes = np.array([s.size for s in self.sets])
        i = np.repeat(np.arange(len(self.sets)), sizes)
        j = np.concatenate(self.sets)
        return i, j, 1.0 / sizes[i]


@dataclass(frozen=True)
class MlearnConfig:
    """Settings of an M-learning fit.

    ``sup_g`` bounds ``g`` in the sensitivity; it defaults to 1 for
    ``constant_one`` and to 6 for ``identity`` with a linear residualizer.
    Identity ``g`` values are clipped at ``sup_g`` so the bound holds.
    """

    gamma: float
    g_kind: str = "constant_one"
    residualizer: str = "none"
    s_size: int = 1
    sup_g: Optional[float] = None
    huber_h: float = 0.5
    m: int = 1
    sign_mode: str = "signed"
    penalty: str = "squared"

    def __post_init__(self):
        if self.g_kind not in G_KINDS:
            raise ConfigError(f"unknown g_kind {self.g_kind!r}; expected one of {G_KINDS}")
        if self.residualizer not in RESIDUALIZERS:
            raise ConfigError(f"unknown residualizer {self.residualizer!r}; expected one of {RESIDUALIZERS}")
        if self.sign_mode not in SIGN_MODES:
            raise ConfigError(f"unknown sign_mode {self.sign_mode!r}; expected one of {SIGN_MODES}")
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ConfigError(f"gamma must be positive, got {self.gamma!r}")
        if int(self.s_size) < 1:
            raise ConfigError(f"s_size must be >= 1, got {self.s_size!r}")
        if int(self.m) < 1:
            raise ConfigError(f"m must be >= 1, got {self.m!r}")
        if not (math.isfinite(self.huber_h) and self.huber_h > 0):
            raise ConfigError(f"huber_h must be positive, got {self.huber_h!r}")
        penalty_coef(self.penalty)
        sup = self.sup_g
        if sup is None:
            if self.g_kind == "constant_one":
                sup = 1.0
            elif self.residualizer == "linear_ols":
                sup = DEFAULT_SUP_G_IDENTITY
            else:
                raise ConfigError("identity g without a linear residualizer needs an explicit sup_g")
        if not (math.isfinite(sup) and sup > 0):
            raise ConfigError(f"sup_g must be positive, got {sup!r}")
        object.__setattr__(self, "sup_g", float(sup))


class Residuals(NamedTuple):
    values: np.ndarray
    rank_deficient: bool


def residualize(records: TrialData, residualizer: str = "linear_ols") -> Residuals:
    """Residualized benefits ``B - s(x)``.

    With ``linear_ols`` ``s`` is a least-squares fit of ``B`` on ``x`` plus an
    intercept. A rank-deficient design falls back to the sample mean and sets
    ``rank_deficient``.

    Raises:
      DataError: fewer than ``p + 2`` records for ``linear_ols``.
    """
    B = records.B
    if residualizer == "none":
        return Residuals(B.copy(), False)
    if residualizer != "linear_ols":
        raise ConfigError(f"unknown residualizer {residualizer!r}")
    n, p = records.x.shape
    if n < p + 2:
        raise DataError(f"linear residualizer needs at least p + 2 = {p + 2} records, got {n}")
    design = np.hstack([np.ones((n, 1)), records.x])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        return Residuals(B - B.mean(), True)
    coef, *_ = np.linalg.lstsq(design, B, rcond=None)
    return Residuals(B - design @ coef, False)


def build_matches(records: TrialData, m: int, x_scaled=None) -> MatchedSets:
    """Match each subject to its ``m`` nearest opposite-arm subjects.

    Distances are Euclidean on ``x_scaled`` (default ``records.x``); ties go
    to the lower index. Fewer than ``m`` matches are kept when the opposite
    arm is smaller.
    """
    if int(m) < 1:
        raise ConfigError(f"m must be >= 1, got {m!r}")
    x = records.x if x_scaled is None else np.atleast_2d(np.asarray(x_scaled, dtype=float))
    if x.shape[0] != len(records):
        raise DataError("scaled features and records differ in length")
    A = records.A
    arms = {a: np.flatnonzero(A == a) for a in (-1.0, 1.0)}
    if arms[-1.0].size == 0 or arms[1.0].size == 0:
        raise DataError("both treatment arms must be non-empty to build matches")
    sets = [None] * len(records)
    for a, own in arms.items():
        other = arms[-a]
        k = min(int(m), other.size)
        d2 = ((x[own, None, :] - x[None, other, :]) ** 2).sum(axis=2)
        # Stable sort on distance keeps the lower index first among ties.
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        for row, i in enumerate(own):
            sets[i] = other[order[row]]
    return MatchedSets(tuple(sets), int(m))


def _pair_terms(records, matches, cfg):
    if len(matches) != len(records):
        raise DataError(f"{len(matches)} matched sets for {len(records)} records")
    i, j, inv = matches.pairs()
    if np.any(records.A[j] == records.A[i]):
        raise DataError("matched sets must contain opposite-arm subjects only")
    diff = records.B[i] - records.B[j]
    if cfg.g_kind == "constant_one":
        g = np.ones_like(diff)
    else:
        g = np.minimum(np.abs(diff), cfg.sup_g)
    sgn = np.sign(diff) if cfg.sign_mode == "signed" else np.sign(np.abs(diff))
    return i, inv * g, records.A[i] * sgn


def _margins(theta, records, matches, cfg):
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != records.x.shape[1]:
        raise DataError(f"theta has length {theta.shape[0]} but features have {records.x.shape[1]} columns")
    i, c, s = _pair_terms(records, matches, cfg)
    z = s * (records.x[i] @ theta)
    return theta, i, c, s, z


def mlearn_objective(theta, records: TrialData, matches: MatchedSets, cfg: MlearnConfig) -> float:
    """Matched Huber loss plus ``gamma * ||theta||^2`` (halved for ``half_squared``).

    ``records.B`` must already hold the residualized benefits.
    """
    theta, _, c, _, z = _margins(theta, records, matches, cfg)
    reg = penalty_coef(cfg.penalty) * cfg.gamma * float(theta @ theta)
    return float(c @ huber_loss(z, cfg.huber_h)) + reg


def mlearn_gradient(theta, records: TrialData, matches: MatchedSets, cfg: MlearnConfig) -> np.ndarray:
    theta, i, c, s, z = _margins(theta, records, matches, cfg)
    coef = c * s * huber_grad(z, cfg.huber_h)
    grad = np.bincount(i, weights=coef, minlength=len(records)) @ records.x
    return grad + 2.0 * penalty_coef(cfg.penalty) * cfg.gamma * theta


def mlearn_hessian(theta, records: TrialData, matches: MatchedSets, cfg: MlearnConfig) -> np.ndarray:
    theta, i, c, s, z = _margins(theta, records, matches, cfg)
    curv = np.bincount(i, weights=c * s * s * huber_curvature(z, cfg.huber_h), minlength=len(records))
    x = records.x
    return (x.T * curv) @ x + 2.0 * penalty_coef(cfg.penalty) * cfg.gamma * np.eye(x.shape[1])


def fit_mlearn(
    records: TrialData, matches: MatchedSets, cfg: MlearnConfig, solver: SolverConfig = SolverConfig()
) -> ModelParams:
    """Minimize :func:`mlearn_objective`; rows of ``records.x`` must have norm <= 1."""
    norms = np.linalg.norm(records.x, axis=1)
    bad = np.flatnonzero(norms > 1.0 + NORM_SLACK)
    if bad.size:
        raise DomainError(f"feature rows exceed unit norm at indices {bad[:10].tolist()}", bad)
    p = records.x.shape[1]
    x0 = np.zeros(p) if solver.init is None else np.asarray(solver.init, dtype=float).reshape(-1)
    if x0.shape[0] != p:
        raise ConfigError(f"initial point has length {x0.shape[0]}, expected {p}")
    res = minimize(
        lambda t: mlearn_objective(t, records, matches, cfg),
        lambda t: mlearn_gradient(t, records, matches, cfg),
        x0,
        solver,
        hess=lambda t: mlearn_hessian(t, records, matches, cfg),
    )
    return ModelParams(res.x)


def mlearn_sensitivity(cfg: MlearnConfig) -> float:
    """l2 sensitivity ``2 * |S| * sup_g / gamma``."""
    return 2.0 * int(cfg.s_size) * cfg.sup_g / cfg.gamma


def privatize_mlearn(theta_hat: ModelParams, epsilon: float, delta_sens: float, rng) -> ModelParams:
    """Add noise with density proportional to ``exp(-(epsilon/delta_sens) * ||e||)``."""
    return perturb(theta_hat, epsilon, delta_sens, rng)
