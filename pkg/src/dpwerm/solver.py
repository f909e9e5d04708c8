"""Deterministic minimization of smooth, strongly convex objectives.

The descent loop uses an Armijo backtracking line search (shrink 0.5,
sufficient decrease 1e-4). The search direction is the negative gradient,
optionally preconditioned by a BFGS estimate or by the generalized Hessian
when one is supplied. Convergence is declared on the gradient norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import Dataset, LossSpec, ModelParams, werm_gradient, werm_hessian, werm_objective
from .errors import ConfigError, ConvergenceError

__all__ = ["SolverConfig", "OptimizeResult", "minimize", "solve_werm", "fit_werm"]

ARMIJO_C = 1e-4
SHRINK = 0.5
MAX_BACKTRACKS = 60
METHODS = ("newton", "bfgs", "gd")
EPS = np.finfo(float).eps
ROUNDING_ULPS = 100.0


@dataclass(frozen=True)
class SolverConfig:
    grad_tol: float = 1e-8
    max_iters: int = 10_000
    init: Optional[np.ndarray] = None
    method: str = "newton"

    def __post_init__(self):
        if not self.grad_tol > 0:
            raise ConfigError(f"grad_tol must be positive, got {self.grad_tol!r}")
        if int(self.max_iters) < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters!r}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown solver method {self.method!r}; expected one of {METHODS}")


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    grad_norm: float
    n_iter: int
    history: list = field(default_factory=list)


def _direction(method, g, hess, x, H_inv):
    if method == "newton" and hess is not None:
        try:
            return -np.linalg.solve(hess(x), g)
        except np.linalg.LinAlgError:
            return -g
    if method == "bfgs":
        return -H_inv @ g
    return -g


def minimize(
    fun: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    x0,
    cfg: SolverConfig = SolverConfig(),
    hess: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> OptimizeResult:
    """Minimize ``fun`` from ``x0`` until ``||grad|| <= cfg.grad_tol``.

    Accepted steps satisfy the Armijo condition, so the recorded history is
    non-increasing; once the predicted decrease is below the rounding floor
    of ``fun`` a step may raise it by at most ``ROUNDING_ULPS`` ulps.

    Raises:
      ConvergenceError: when ``max_iters`` is exhausted or the line search
        cannot make progress; carries the final gradient norm.
    """
    x = np.array(x0, dtype=float).reshape(-1)
    f = fun(x)
    g = grad(x)
    gnorm = float(np.linalg.norm(g))
    history = [f]
    H_inv = np.eye(x.shape[0])
    method = cfg.method if (cfg.method != "newton" or hess is not None) else "bfgs"

    for it in range(int(cfg.max_iters)):
        if gnorm <= cfg.grad_tol:
            return OptimizeResult(x, f, gnorm, it, history)
        d = _direction(method, g, hess, x, H_inv)
        slope = float(g @ d)
        if not slope < 0:
            # Preconditioner lost positive definiteness; restart from steepest descent.
            H_inv = np.eye(x.shape[0])
            d = -g
            slope = -gnorm**2
        # Below ~100 ulps of f the Armijo test only sees rounding noise; there a
        # step must strictly shrink the gradient and keep f within that band.
        band = ROUNDING_ULPS * EPS * max(1.0, abs(f))
        rounding = abs(slope) < band
        t = 1.0
        for _ in range(MAX_BACKTRACKS):
            x_new = x + t * d
            f_new = fun(x_new)
            if rounding:
                g_new = grad(x_new)
                if f_new <= f + band and np.linalg.norm(g_new) < gnorm:
                    break
            elif f_new <= f + ARMIJO_C * t * slope:
                g_new = grad(x_new)
                break
            t *= SHRINK
        else:
            raise ConvergenceError(
                f"line search failed at iteration {it} with gradient norm {gnorm:.3e}",
                grad_norm=gnorm,
                n_iter=it,
            )
        if method == "bfgs":
            s = x_new - x
            yv = g_new - g
            sy = float(s @ yv)
            if sy > 1e-300:
                rho = 1.0 / sy
                V = np.eye(x.shape[0]) - rho * np.outer(s, yv)
                H_inv = V @ H_inv @ V.T + rho * np.outer(s, s)
        x, f, g = x_new, f_new, g_new
        gnorm = float(np.linalg.norm(g))
        history.append(f)

    if gnorm <= cfg.grad_tol:
        return OptimizeResult(x, f, gnorm, int(cfg.max_iters), history)
    raise ConvergenceError(
        f"no convergence within {cfg.max_iters} iterations; gradient norm {gnorm:.3e}",
        grad_norm=gnorm,
        n_iter=int(cfg.max_iters),
    )


def _initial(cfg, p):
    if cfg.init is None:
        return np.zeros(p)
    x0 = np.asarray(cfg.init, dtype=float).reshape(-1)
    if x0.shape[0] != p:
        raise ConfigError(f"initial point has length {x0.shape[0]}, expected {p}")
    return x0


def solve_werm(
    data: Dataset,
    gamma: float,
    loss: LossSpec = LossSpec(),
    cfg: SolverConfig = SolverConfig(),
    penalty: str = "squared",
) -> OptimizeResult:
    """Like :func:`fit_werm` but returns the full :class:`OptimizeResult`."""
    return minimize(
        lambda t: werm_objective(t, data, gamma, loss, penalty),
        lambda t: werm_gradient(t, data, gamma, loss, penalty),
        _initial(cfg, data.p),
        cfg,
        hess=lambda t: werm_hessian(t, data, gamma, loss, penalty),
    )


def fit_werm(
    data: Dataset,
    gamma: float,
    loss: LossSpec = LossSpec(),
    cfg: SolverConfig = SolverConfig(),
    penalty: str = "squared",
) -> ModelParams:
    """Non-private weighted ERM estimate ``theta_hat`` (deterministic)."""
    res = solve_werm(data, gamma, loss, cfg, penalty)
    return ModelParams(res.x, privatized=False)
