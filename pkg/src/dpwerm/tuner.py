"""Selection of the regularization constant on an independent dataset.

For a target training size ``n`` and budget ``epsilon`` every candidate
``gamma`` is scored by repeatedly splitting the independent dataset into a
training part of size ``n`` and a validation part, fitting private OWL on
the former and scoring the privatized rule on the latter.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError
from .owl import OwlConfig, TrialData, assign_many, empirical_value, fit_dp_owl, preprocess_features
from .privacy import as_generator
from .solver import SolverConfig

__all__ = ["DEFAULT_CANDIDATES", "TuneConfig", "TuneResult", "tune_gamma", "split_indices", "robustness_region"]

DEFAULT_CANDIDATES = tuple(float(g) for g in range(1, 602, 20))
METRICS = ("accuracy", "value")


@dataclass(frozen=True, eq=False)
class TuneConfig:
    """Inputs of :func:`tune_gamma`.

    ``optimal`` holds the true best treatment of every record of ``data``
    and is needed only for ``metric="accuracy"``; ``metric=None`` picks
    accuracy when it is available and the empirical value otherwise.
    ``owl`` supplies every fit setting apart from gamma and epsilon.
    ``literal_n0`` draws bootstrap training sets of size ``n0`` instead of
    ``n``.
    """

    n: int
    epsilon: float
    data: TrialData
    m: int
    candidates: Sequence[float] = DEFAULT_CANDIDATES
    r: int = 200
    metric: Optional[str] = None
    optimal: Optional[np.ndarray] = None
    owl: Optional[OwlConfig] = None
    literal_n0: bool = False
    warm_start: bool = True
    threads: int = 1

    def __post_init__(self):
        n0 = len(self.data)
        if int(self.n) < 1:
            raise ConfigError(f"target size n must be >= 1, got {self.n!r}")
        if int(self.m) < 1:
            raise ConfigError(f"validation size m must be >= 1, got {self.m!r}")
        if n0 <= int(self.m):
            raise ConfigError(f"independent dataset size n0={n0} must exceed m={self.m}")
        if int(self.r) < 1:
            raise ConfigError(f"repeats r must be >= 1, got {self.r!r}")
        if math.isnan(self.epsilon) or not self.epsilon > 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon!r}")
        cands = np.asarray(self.candidates, dtype=float).reshape(-1)
        if cands.size == 0 or not np.all(np.isfinite(cands)) or np.any(cands <= 0):
            raise ConfigError("candidates must be a non-empty sequence of positive gammas")
        if np.any(np.diff(cands) <= 0):
            raise ConfigError("candidates must be strictly ascending")
        object.__setattr__(self, "candidates", tuple(cands.tolist()))
        metric = self.metric
        if metric is None:
            metric = "accuracy" if self.optimal is not None else "value"
        if metric not in METRICS:
            raise ConfigError(f"unknown metric {metric!r}; expected one of {METRICS}")
        if metric == "accuracy":
            if self.optimal is None:
                raise ConfigError("metric 'accuracy' needs true optimal labels; use metric 'value' on real data")
            opt = np.asarray(self.optimal).reshape(-1)
            if opt.shape[0] != n0:
                raise ConfigError("optimal labels must have one entry per record")
            object.__setattr__(self, "optimal", opt)
        object.__setattr__(self, "metric", metric)
        if int(self.threads) < 1:
            raise ConfigError("threads must be >= 1")


@dataclass(eq=False)
class TuneResult:
    gamma: float
    candidates: tuple
    mean_metric: np.ndarray
    repeat_metrics: np.ndarray
    metric: str

    @property
    def index(self) -> int:
        return self.candidates.index(self.gamma)

    def metric_by_gamma(self):
        return list(zip(self.candidates, self.mean_metric.tolist()))


def split_indices(n0: int, n: int, m: int, gen, literal_n0: bool = False):
    """One training/validation split of ``range(n0)``.

    Returns:
      ``(train, valid)`` index arrays. When ``n > n0 - m`` the validation set
      has ``m`` points and ``train`` is drawn with replacement from the rest;
      otherwise ``train`` is ``n`` points without replacement and ``valid``
      is the complement.
    """
    perm = gen.permutation(n0)
    if n > n0 - m:
        valid, rest = perm[:m], perm[m:]
        size = n0 if literal_n0 else n
        train = rest[gen.integers(0, rest.size, size=size)]
        return train, np.sort(valid)
    return perm[:n], np.sort(perm[n:])


def _score(theta, cfg, x_scaled, idx):
    if cfg.metric == "accuracy":
        T = assign_many(theta, x_scaled[idx])
        return 100.0 * float(np.mean(T == cfg.optimal[idx]))
    return empirical_value(theta, cfg.data.subset(idx), x_scaled[idx])


def _one_repeat(cfg, template, x_scaled, rng):
    train, valid = split_indices(len(cfg.data), int(cfg.n), int(cfg.m), as_generator(rng.child(0)), cfg.literal_n0)
    records = cfg.data.subset(train)
    x_train = x_scaled[train]
    noise = rng.child(1)
    scores = np.empty(len(cfg.candidates))
    init = None
    for k, gamma in enumerate(cfg.candidates):
        owl = replace(template, gamma=gamma, epsilon=cfg.epsilon)
        if init is not None:
            owl = replace(owl, solver=replace(owl.solver, init=init))
        # One noise stream per repeat is shared by every candidate, so the
        # comparison across gammas is not blurred by independent noise draws.
        fit = fit_dp_owl(records, owl, noise, x_scaled=x_train)
        if cfg.warm_start:
            init = fit.theta_hat.theta
        scores[k] = _score(fit.theta_star, cfg, x_scaled, valid)
    return scores


def tune_gamma(cfg: TuneConfig, rng) -> TuneResult:
    """Pick the candidate with the highest mean validation metric.

    Repeat ``j`` uses ``rng.child(j)``; ties go to the smallest gamma.
    """
    template = cfg.owl if cfg.owl is not None else OwlConfig(gamma=1.0, epsilon=cfg.epsilon)
    template = replace(template, solver=replace(template.solver, init=None))
    x_scaled = preprocess_features(cfg.data.x, template)

    def work(j):
        return _one_repeat(cfg, template, x_scaled, rng.child(j))

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=int(cfg.threads)) as pool:
            rows = list(pool.map(work, range(int(cfg.r))))
    else:
        rows = [work(j) for j in range(int(cfg.r))]
    repeat_metrics = np.vstack(rows)
    mean = repeat_metrics.mean(axis=0)
    best = int(np.argmax(mean))
    return TuneResult(cfg.candidates[best], cfg.candidates, mean, repeat_metrics, cfg.metric)


def robustness_region(metric_by_gamma, tol_frac: float = 0.05):
    """Smallest and largest gamma whose metric is within ``tol_frac`` of the best.

    Args:
      metric_by_gamma: ``(gamma, mean metric)`` pairs in ascending gamma order.
      tol_frac: relative tolerance in (0, 1).
    """
    pairs = [(float(g), float(v)) for g, v in metric_by_gamma]
    if not pairs:
        raise ConfigError("robustness_region needs at least one (gamma, metric) pair")
    if not 0 < tol_frac < 1:
        raise ConfigError(f"tol_frac must be in (0, 1), got {tol_frac!r}")
    best = max(v for _, v in pairs)
    keep = [g for g, v in pairs if v >= (1.0 - tol_frac) * best]
    return min(keep), max(keep)
