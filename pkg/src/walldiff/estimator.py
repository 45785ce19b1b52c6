"""Gauss (Gauss-Newton) estimation of the diffusivity from sensor data.

All residuals are in dimensionless temperature and time.  The forward model
returns the field at the sensors and its sensitivity to Fo; the chain rule
``du/dalpha = theta * t_ref / L**2`` turns it into a sensitivity to the
diffusivity, which is the iterated parameter.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import AlignmentError, DomainError, IdentifiabilityError
from .model import integrate_lom
from .rom import integrate_rom

CONVERGED = "converged"
MAX_ITERATIONS = "max-iterations"


@dataclass(frozen=True)
class EstimationConfig:
    p_apr: float
    eta1: float = 1e-14
    eta2: float = 1e-14
    max_iter: int = 100
    bounds: tuple[float, float] = (1e-8, 1e-5)
    max_halvings: int = 5

    def __post_init__(self):
        lo, hi = self.bounds
        if not (0 < lo < hi):
            raise DomainError(f"parameter bounds must be a positive interval, got {self.bounds}")
        if not lo <= self.p_apr <= hi:
            raise DomainError(f"prior {self.p_apr} lies outside the bounds {self.bounds}")
        if not (self.eta1 > 0 and self.eta2 > 0):
            raise DomainError("tolerances must be positive")
        if self.max_iter < 1:
            raise DomainError("at least one iteration is required")


@dataclass
class EstimationTrace:
    """Iterates of one estimation; index 0 holds the prior."""

    p: list = field(default_factory=list)
    J: list = field(default_factory=list)
    gamma1: list = field(default_factory=list)
    gamma2: list = field(default_factory=list)
    halvings: list = field(default_factory=list)
    status: str = ""
    t_cpu: float = 0.0

    @property
    def iterations(self):
        return len(self.p) - 1

    @property
    def estimate(self):
        return self.p[-1]

    def rows(self):
        """``(k, p_k, J_k, gamma1, gamma2)`` with blank criteria at k = 0."""
        out = [(0, self.p[0], self.J[0], float("nan"), float("nan"))]
        for k in range(1, len(self.p)):
            out.append((k, self.p[k], self.J[k], self.gamma1[k - 1], self.gamma2[k - 1]))
        return out


def trapezoid_weights(n, dt):
    w = np.full(n, float(dt))
    w[0] = w[-1] = 0.5 * dt
    return w


def cost(model_u, measured, dt):
    """``J = sum_s integral (u_model - u_meas)**2 dt`` with the trapezoid rule."""
    model_u = np.asarray(model_u, dtype=float)
    measured = np.asarray(measured, dtype=float)
    if model_u.shape != measured.shape:
        raise AlignmentError(f"model {model_u.shape} and data {measured.shape} grids differ")
    w = trapezoid_weights(model_u.shape[0], dt)
    return float(w @ ((model_u - measured) ** 2).sum(axis=1))


def gauss_step(p, model_u, sens, measured, dt, bounds=(1e-8, 1e-5)):
    """One Gauss update of the scalar parameter, clamped to ``bounds``.

    ``sens`` is the sensitivity of the model output to ``p`` itself.
    """
    model_u = np.asarray(model_u, dtype=float)
    measured = np.asarray(measured, dtype=float)
    sens = np.asarray(sens, dtype=float)
    if not (model_u.shape == measured.shape == sens.shape):
        raise AlignmentError("model output, sensitivity and data must share one grid")
    w = trapezoid_weights(model_u.shape[0], dt)
    num = w @ (sens * (measured - model_u)).sum(axis=1)
    den = w @ (sens**2).sum(axis=1)
    if not (np.isfinite(den) and den > 0 and np.isfinite(num / den)):
        raise IdentifiabilityError("sensitivity vanishes over the window; parameter not identifiable")
    return float(np.clip(p + num / den, *bounds))


# ---------------------------------------------------------------------------
# Forward models
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class LomForward:
    """LOM outputs at the data grid for a given diffusivity."""

    system: object
    forcing: object
    init: np.ndarray
    dt: float
    t_end: float
    every: int
    scaling: object
    label: str = "LOM"

    def __call__(self, alpha):
        fo = self.scaling.fourier(alpha, self.system.length)
        sol = integrate_lom(self.system, fo, self.forcing, self.init, self.dt,
                            t_end=self.t_end, every=self.every)
        return sol.yu, sol.ytheta * self.scaling.t_ref / self.system.length**2


@dataclass(eq=False)
class RomForward:
    """ROM outputs at the data grid for a given diffusivity."""

    reduced: object
    forcing: object
    dt: float
    t_end: float
    every: int
    scaling: object
    x0: np.ndarray | None = None
    label: str = "ROM"

    def __call__(self, alpha):
        fo = self.scaling.fourier(alpha, self.reduced.length)
        sol = integrate_rom(self.reduced, fo, self.forcing, self.dt, t_end=self.t_end,
                            every=self.every, x0=self.x0, T_ref=self.scaling.T_ref)
        return sol.yu, sol.ytheta * self.scaling.t_ref / self.reduced.length**2


# ---------------------------------------------------------------------------
# Iteration
# ---------------------------------------------------------------------------

def estimate(config, measured, sample_dt, forward):
    """Run the Gauss iteration from ``config.p_apr``.

    Parameters
    ----------
    config : EstimationConfig
    measured : ndarray, shape (n_t, n_s)
        Dimensionless observations on the forward model's output grid.
    sample_dt : float
        Dimensionless spacing of that grid.
    forward : callable
        ``alpha -> (u, du/dalpha)`` at the observation grid.

    Returns
    -------
    (float, EstimationTrace)
        The iteration stops as soon as either relative change, of the cost
        or of the parameter, drops below its tolerance, or after
        ``config.max_iter`` iterations.  A step that raises the cost is
        halved up to ``config.max_halvings`` times.
    """
    start = time.perf_counter()
    measured = np.asarray(measured, dtype=float)
    trace = EstimationTrace()
    p = float(config.p_apr)
    u, s = forward(p)
    if u.shape != measured.shape:
        raise AlignmentError(f"model output {u.shape} does not match data {measured.shape}")
    J = cost(u, measured, sample_dt)
    trace.p.append(p)
    trace.J.append(J)
    trace.status = MAX_ITERATIONS
    for _ in range(config.max_iter):
        p_new = gauss_step(p, u, s, measured, sample_dt, config.bounds)
        u_new, s_new = forward(p_new)
        J_new = cost(u_new, measured, sample_dt)
        halved = 0
        while J_new > J and halved < config.max_halvings:
            p_new = 0.5 * (p + p_new)
            u_new, s_new = forward(p_new)
            J_new = cost(u_new, measured, sample_dt)
            halved += 1
        g1 = 0.0 if J < 1e-300 else abs(J_new - J) / abs(J)
        g2 = abs(p_new - p) / abs(p)
        trace.p.append(p_new)
        trace.J.append(J_new)
        trace.gamma1.append(g1)
        trace.gamma2.append(g2)
        trace.halvings.append(halved)
        p, u, s, J = p_new, u_new, s_new, J_new
        if g1 < config.eta1 or g2 < config.eta2:
            trace.status = CONVERGED
            break
    trace.t_cpu = time.perf_counter() - start
    return p, trace


def stability_scan(config, measured, sample_dt, forward, guesses):
    """Estimate once per initial guess; rows are ``(guess, estimate, iterations)``."""
    rows = []
    for g in guesses:
        cfg = EstimationConfig(p_apr=float(g), eta1=config.eta1, eta2=config.eta2,
                               max_iter=config.max_iter, bounds=config.bounds,
                               max_halvings=config.max_halvings)
        p, tr = estimate(cfg, measured, sample_dt, forward)
        rows.append((float(g), p, tr.iterations))
    return rows
