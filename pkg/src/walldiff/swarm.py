"""Global-best particle swarm minimizer with box bounds."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, LearningError


@dataclass(frozen=True)
class SwarmConfig:
    particles: int = 50
    iterations: int = 100
    inertia: float = 0.7
    cognitive: float = 1.5
    social: float = 1.5
    bound_scale: float = 10.0
    init_spread: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.particles < 2:
            raise DomainError(f"swarm needs at least 2 particles, got {self.particles}")
        if self.iterations < 1:
            raise DomainError(f"swarm needs at least 1 iteration, got {self.iterations}")
        if not (self.bound_scale > 0 and np.isfinite(self.bound_scale)):
            raise DomainError("bound_scale must be positive and finite")
        if self.init_spread < 0:
            raise DomainError("init_spread must be non-negative")


@dataclass
class SwarmResult:
    x: np.ndarray
    value: float
    history: np.ndarray
    evaluations: int


def particle_swarm(objective, x0, lower, upper, cfg):
    """Minimize ``objective`` over the box ``[lower, upper]``.

    Particle 0 starts exactly at ``x0``; the others start at ``x0`` plus a
    uniform perturbation of ``init_spread`` times the box width, clipped to
    the box.  Non-finite objective values count as ``+inf``.  The returned
    best value never exceeds ``objective(x0)``.

    Parameters
    ----------
    objective : callable
        Maps a 1-D coordinate vector to a float.
    x0, lower, upper : ndarray
        Starting point and finite search bounds.
    cfg : SwarmConfig

    Returns
    -------
    SwarmResult
        Best position, its value, and the best-so-far value per iteration.
    """
    x0 = np.asarray(x0, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise DomainError("swarm bounds must be finite")
    if np.any(upper < lower):
        raise DomainError("swarm upper bounds must not be below lower bounds")
    rng = np.random.default_rng(cfg.seed)
    width = upper - lower
    n, d = cfg.particles, x0.size

    def f(x):
        v = float(objective(x))
        return v if np.isfinite(v) else np.inf

    pos = x0 + cfg.init_spread * width * rng.uniform(-1.0, 1.0, (n, d))
    pos[0] = x0
    pos = np.clip(pos, lower, upper)
    vel = 0.1 * width * rng.uniform(-1.0, 1.0, (n, d))
    vel[0] = 0.0
    val = np.array([f(p) for p in pos])
    best_pos = pos.copy()
    best_val = val.copy()
    g = int(np.argmin(best_val))
    history = np.empty(cfg.iterations + 1)
    history[0] = best_val[g]
    evals = n
    for it in range(cfg.iterations):
        r1 = rng.random((n, d))
        r2 = rng.random((n, d))
        vel = (cfg.inertia * vel
               + cfg.cognitive * r1 * (best_pos - pos)
               + cfg.social * r2 * (best_pos[g] - pos))
        pos = np.clip(pos + vel, lower, upper)
        val = np.array([f(p) for p in pos])
        evals += n
        improved = val < best_val
        best_pos[improved] = pos[improved]
        best_val[improved] = val[improved]
        g = int(np.argmin(best_val))
        history[it + 1] = best_val[g]
    if not np.isfinite(best_val[g]):
        raise LearningError("every particle produced a non-finite objective")
    return SwarmResult(x=best_pos[g].copy(), value=float(best_val[g]),
                       history=history, evaluations=evals)
