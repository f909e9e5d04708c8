"""Synthetic randomized-trial generator and the Monte-Carlo experiment harness."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import stats

from .errors import ConfigError
from .owl import OwlConfig, TrialData, assign_many, empirical_value, fit_dp_owl, preprocess_features, shift_benefits
from .privacy import as_generator

__all__ = [
    "THETA_0",
    "THETA_1",
    "THETA_2",
    "SPARSITY_THETAS",
    "SimConfig",
    "ExperimentRow",
    "ExperimentTable",
    "generate",
    "scenario_variants",
    "run_experiment",
    "mean_ci",
]

THETA_0 = (1.0, 1.0, 1.0, -1.8, -2.2)
THETA_1 = (1.0, -1.0, -1.0, 1.5, -1.5)
THETA_2 = (1.0, -0.5, 0.5, 1.0, 1.5, -2.5, -2.0)

# Intercept-first coefficient vectors with p non-zero slopes; each has
# E[f(x)] = 0 under U[0, 1] features so both arms stay balanced.
SPARSITY_THETAS = {
    2: (1.0, 2.0, -4.0),
    4: THETA_0,
    6: (1.0, 1.0, 1.0, -1.8, -2.2, 1.0, -1.0),
    8: (1.0, 1.0, 1.0, -1.8, -2.2, 1.0, -1.0, 1.5, -1.5),
}

Z_95 = 1.96


def _pad(theta, d):
    theta = tuple(float(t) for t in theta)
    if len(theta) > d + 1:
        raise ConfigError(f"theta_true has {len(theta)} entries but only d={d} features")
    return theta + (0.0,) * (d + 1 - len(theta))


@dataclass(frozen=True)
class SimConfig:
    """Phase-II style trial: U[0,1] features, 1:1 randomization, normal benefit.

    The optimal treatment is ``sign(theta_true @ (1, x))`` and the benefit
    mean is ``base + slope * x_4 + effect * A * f(x)``.
    """

    n: int = 1000
    d: int = 10
    theta_true: tuple = THETA_0
    feature_dist: str = "uniform01"
    tn_means: Optional[tuple] = None
    tn_sd: float = 0.25
    sigma: float = 0.5
    base: float = 0.01
    slope: float = 0.02
    effect: float = 3.0

    def __post_init__(self):
        if int(self.n) < 1 or int(self.d) < 4:
            raise ConfigError("n must be >= 1 and d >= 4")
        object.__setattr__(self, "theta_true", _pad(self.theta_true, self.d))
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma!r}")
        if self.feature_dist not in ("uniform01", "truncated_normal"):
            raise ConfigError(f"unknown feature distribution {self.feature_dist!r}")
        if self.feature_dist == "truncated_normal":
            means = self.tn_means if self.tn_means is not None else tuple(np.linspace(0.2, 0.8, self.d))
            if len(means) != self.d:
                raise ConfigError("tn_means must have one entry per feature")
            object.__setattr__(self, "tn_means", tuple(float(m) for m in means))
            if not self.tn_sd > 0:
                raise ConfigError("tn_sd must be positive")


def _features(cfg: SimConfig, gen, n):
    if cfg.feature_dist == "uniform01":
        return gen.uniform(0.0, 1.0, size=(n, cfg.d))
    mu = np.asarray(cfg.tn_means)
    a, b = (0.0 - mu) / cfg.tn_sd, (1.0 - mu) / cfg.tn_sd
    return stats.truncnorm.rvs(a, b, loc=mu, scale=cfg.tn_sd, size=(n, cfg.d), random_state=gen)


def generate(cfg: SimConfig, rng, n: Optional[int] = None):
    """Simulate one trial.

    Returns:
      ``(records, optimal)`` where ``records`` holds shifted benefits and
      ``optimal`` the true best treatment of every subject.
    """
    gen = as_generator(rng)
    n = cfg.n if n is None else int(n)
    x = _features(cfg, gen, n)
    A = np.where(gen.uniform(size=n) < 0.5, 1.0, -1.0)
    theta = np.asarray(cfg.theta_true)
    f = theta[0] + x @ theta[1:]
    optimal = np.where(f > 0, 1, -1)
    mu = cfg.base + cfg.slope * x[:, 3] + cfg.effect * A * f
    B = gen.normal(mu, cfg.sigma)
    return TrialData(x, A, shift_benefits(B), np.full(n, 0.5)), optimal


def scenario_variants(base: SimConfig, variant: str, value=None) -> SimConfig:
    """Perturb one aspect of ``base`` for tuner-robustness studies.

    ``variant`` is one of ``"size"`` (value: n0), ``"theta"`` (value: 0, 1, 2
    or an explicit vector), ``"dist"`` (truncated normal features; value:
    optional means) or ``"sparsity"`` (value: 2, 4, 6 or 8).
    """
    if variant == "size":
        return replace(base, n=int(value))
    if variant == "theta":
        named = {0: THETA_0, 1: THETA_1, 2: THETA_2}
        theta = named[value] if value in named else value
        if theta is None:
            raise ConfigError("theta variant needs 0, 1, 2 or a coefficient vector")
        return replace(base, theta_true=tuple(theta))
    if variant == "dist":
        return replace(base, feature_dist="truncated_normal", tn_means=value)
    if variant == "sparsity":
        if value not in SPARSITY_THETAS:
            raise ConfigError(f"sparsity must be one of {sorted(SPARSITY_THETAS)}, got {value!r}")
        return replace(base, theta_true=SPARSITY_THETAS[value])
    raise ConfigError(f"unknown scenario variant {variant!r}")


def mean_ci(scores):
    """Mean and normal-approximation 95% interval ``mean +- 1.96 sd / sqrt(R)``."""
    s = np.asarray(scores, dtype=float)
    m = float(s.mean())
    if s.size < 2:
        return m, m, m
    half = Z_95 * float(s.std(ddof=1)) / math.sqrt(s.size)
    return m, m - half, m + half


@dataclass
class ExperimentRow:
    epsilon: float
    n: int
    gamma: float
    accuracy: list = field(default_factory=list)
    value: list = field(default_factory=list)

    @property
    def repeats(self):
        return len(self.accuracy)

    def summary(self):
        acc = mean_ci(self.accuracy)
        val = mean_ci(self.value)
        return {
            "epsilon": self.epsilon,
            "n": self.n,
            "repeats": self.repeats,
            "acc_mean": acc[0],
            "acc_lo": acc[1],
            "acc_hi": acc[2],
            "val_mean": val[0],
            "val_lo": val[1],
            "val_hi": val[2],
        }


@dataclass
class ExperimentTable:
    rows: list

    CSV_COLUMNS = ("epsilon", "n", "repeats", "acc_mean", "acc_lo", "acc_hi", "val_mean", "val_lo", "val_hi")

    def row(self, epsilon, n) -> ExperimentRow:
        for r in self.rows:
            if r.epsilon == epsilon and r.n == n:
                return r
        raise KeyError((epsilon, n))

    def summaries(self):
        return [r.summary() for r in self.rows]


def _owl_config(base: Optional[OwlConfig], gamma, epsilon):
    if base is None:
        return OwlConfig(gamma=gamma, epsilon=epsilon, features=(0, 1, 2, 3))
    return replace(base, gamma=gamma, epsilon=epsilon)


def _one_repeat(sim, owl_cfg, n, test_size, rng):
    train, _ = generate(sim, rng.child(0), n=n)
    test, optimal = generate(sim, rng.child(1), n=test_size)
    fit = fit_dp_owl(train, owl_cfg, rng.child(2))
    x_test = preprocess_features(test.x, owl_cfg)
    T = assign_many(fit.theta_star, x_test)
    acc = 100.0 * float(np.mean(T == optimal))
    return acc, empirical_value(fit.theta_star, test, x_test)


def run_experiment(
    grid: Sequence,
    repeats: int,
    test_size: int = 5000,
    tuned_gammas: Mapping = None,
    rng=None,
    sim: SimConfig = SimConfig(),
    owl: Optional[OwlConfig] = None,
    threads: int = 1,
) -> ExperimentTable:
    """Monte-Carlo accuracy and value of private OWL over an ``(epsilon, n)`` grid.

    Every repeat simulates a fresh training set of size ``n`` and a test set
    of size ``test_size`` and scores the privatized rule on the test set.
    Repeat ``j`` of cell ``c`` draws from stream ``rng.child(c, j)``, so the
    table does not depend on the number of worker threads.

    Args:
      grid: ``(epsilon, n)`` pairs; ``math.inf`` means no privacy.
      repeats: Monte-Carlo repeats per cell.
      test_size: size of each simulated test set.
      tuned_gammas: map from ``(epsilon, n)`` to the regularization constant.
      rng: root :class:`~dpwerm.privacy.Rng`.
      sim: generator settings shared by every cell.
      owl: template for the non-gamma, non-epsilon fit settings.
      threads: worker count.
    """
    if tuned_gammas is None:
        raise ConfigError("tuned_gammas is required")
    if int(repeats) < 1:
        raise ConfigError("repeats must be >= 1")
    rows = []
    jobs = []
    for c, (eps, n) in enumerate(grid):
        key = (eps, n)
        if key not in tuned_gammas:
            raise ConfigError(f"no tuned gamma for cell epsilon={eps}, n={n}")
        row = ExperimentRow(float(eps), int(n), float(tuned_gammas[key]))
        rows.append(row)
        cfg = _owl_config(owl, row.gamma, row.epsilon)
        for j in range(int(repeats)):
            jobs.append((row, cfg, j, rng.child(c, j)))

    def work(job):
        row, cfg, _, r = job
        return _one_repeat(sim, cfg, row.n, test_size, r)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(job) for job in jobs]
    for (row, _, _, _), (acc, val) in zip(jobs, results):
        row.accuracy.append(acc)
        row.value.append(val)
    return ExperimentTable(rows)
