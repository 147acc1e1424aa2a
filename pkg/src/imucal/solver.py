"""Levenberg-Marquardt for small dense least-squares problems.

Residual functions are batched: they take an ``(m, p)`` array of parameter
vectors and return ``(m, r)`` residuals, so a central-difference Jacobian
costs a single call.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import STANDARD_GRAVITY

BatchResiduals = Callable[[np.ndarray], np.ndarray]


@dataclass
class SolverConfig:
    max_iterations: int = 200
    gradient_tolerance: float = 1e-12
    parameter_tolerance: float = 1e-10
    initial_damping: float = 1e-3
    damping_up: float = 10.0
    damping_down: float = 0.1
    max_damping: float = 1e16
    jacobian_step: float = 1e-7
    gravity_magnitude: float = STANDARD_GRAVITY
    integration_method: str = "rk4"
    # datasheet sensitivities used as the starting scale factors
    accel_sensitivity: float = 1.0
    gyro_sensitivity: float = 1.0
    analytic_accel_jacobian: bool = False

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if min(self.gradient_tolerance, self.parameter_tolerance, self.initial_damping) <= 0:
            raise ValueError("tolerances and damping must be positive")
        if self.integration_method not in ("rk4", "euler"):
            raise ValueError("integration_method must be 'rk4' or 'euler'")


@dataclass
class LMResult:
    x: np.ndarray
    cost: float
    iterations: int
    converged: bool
    reason: str
    cost_history: list = field(default_factory=list)


def numerical_jacobian(residuals: BatchResiduals, x: np.ndarray, step: float = 1e-7) -> np.ndarray:
    """Central differences with step ``step * max(1, |x_i|)``."""
    x = np.asarray(x, dtype=float)
    h = step * np.maximum(1.0, np.abs(x))
    E = np.diag(h)
    r = residuals(np.concatenate([x + E, x - E]))
    p = len(x)
    return ((r[:p] - r[p:]) / (2.0 * h[:, None])).T


def levenberg_marquardt(
    residuals: BatchResiduals,
    x0,
    cfg: SolverConfig,
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None,
) -> LMResult:
    x = np.array(x0, dtype=float)
    r = residuals(x[None])[0]
    cost = float(r @ r)
    history = [cost]
    if jacobian is None:
        jacobian = lambda v: numerical_jacobian(residuals, v, cfg.jacobian_step)

    lam = cfg.initial_damping
    J = jacobian(x)
    it = 0
    while it < cfg.max_iterations:
        g = J.T @ r
        if cost == 0.0 or np.max(np.abs(g)) <= cfg.gradient_tolerance:
            return LMResult(x, cost, it, True, "gradient", history)
        A = J.T @ J
        d = np.maximum(np.diag(A), 1e-300)
        it += 1
        try:
            delta = np.linalg.solve(A + lam * np.diag(d), -g)
        except np.linalg.LinAlgError:
            delta = None
        small = delta is not None and (
            np.linalg.norm(delta) <= cfg.parameter_tolerance * (np.linalg.norm(x) + cfg.parameter_tolerance)
        )
        if delta is not None:
            x_new = x + delta
            r_new = residuals(x_new[None])[0]
            cost_new = float(r_new @ r_new)
        if delta is not None and np.isfinite(cost_new) and cost_new < cost:
            x, r, cost = x_new, r_new, cost_new
            history.append(cost)
            lam = max(lam * cfg.damping_down, 1e-300)
            if small:
                return LMResult(x, cost, it, True, "parameter", history)
            J = jacobian(x)
        else:
            if small:
                return LMResult(x, cost, it, True, "parameter", history)
            lam *= cfg.damping_up
            if lam > cfg.max_damping:
                return LMResult(x, cost, it, False, "damping overflow", history)
    return LMResult(x, cost, it, False, "iteration cap", history)
