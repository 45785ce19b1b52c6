"""Observation-window selection by the D-criterion of the Fisher information.

With one unknown parameter the Fisher matrix is the scalar::

    Psi = sum_s (1 / sigma_s**2) * integral of theta_s(t)**2 dt

over the window, with ``theta`` the dimensionless sensitivity to Fo,
``sigma_s`` the sensor uncertainty divided by ``T_ref`` and time in
dimensionless units.  Each window is integrated with the trapezoid rule on
its own samples, so values are additive over windows that share endpoints.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import (
    BoundaryForcing,
    assemble_lom,
    integrate_lom,
    nondimensionalize,
    spatial_gradient,
)


@dataclass(frozen=True)
class UncertaintyModel:
    sigma_m: float = 0.1
    delta_x: float = 0.02

    def __post_init__(self):
        if not self.sigma_m > 0:
            raise DomainError(f"sensor noise must be positive, got {self.sigma_m}")
        if self.delta_x < 0:
            raise DomainError(f"position uncertainty must be non-negative, got {self.delta_x}")


@dataclass(frozen=True)
class MeasurementPlan:
    """One candidate window; times in days, ``sigma`` per sensor in degC."""

    t_ini: float
    length: float
    sigma: tuple[float, ...]
    psi_raw: float = 0.0
    psi: float = 0.0

    @property
    def t_end(self):
        return self.t_ini + self.length


def sensor_uncertainty(solution, system, scaling, model, rows=None):
    """Per-sensor uncertainty in degC combining noise and position error.

    ``sigma_s(t) = sqrt(sigma_m**2 + (dT/dx(x_s, t) * delta_x)**2)``, reduced to
    one value per sensor by the RMS over ``rows`` (all samples by default).

    Parameters
    ----------
    solution : ObservableSolution
        Must carry the interior field (run with ``keep_field=True``).
    system : StateSpaceSystem
    scaling : DimensionlessScaling
    model : UncertaintyModel
    rows : slice or index array, optional
    """
    full = solution.full_field()
    if rows is not None:
        full = full[rows]
    if full.shape[0] == 0:
        raise DomainError("no samples to evaluate the uncertainty on")
    # du/dx* -> dT/dx in degC per metre
    grad = spatial_gradient(system, full, system.positions) * scaling.T_ref / system.length
    sig_t = np.sqrt(model.sigma_m**2 + (grad * model.delta_x) ** 2)
    return np.sqrt(np.mean(sig_t**2, axis=0))


def fisher(theta, sigma, dt):
    """Scalar Fisher information of a window.

    Parameters
    ----------
    theta : ndarray, shape (n_t, n_s)
        Sensitivities on a uniform grid of step ``dt``.
    sigma : array_like, shape (n_s,)
        Per-sensor uncertainty in the same units as the field.
    dt : float
    """
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    if theta.shape[0] < 2:
        raise DomainError("a window needs at least two samples")
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise DomainError("uncertainties must be positive")
    sq = theta**2
    integral = dt * (sq.sum(axis=0) - 0.5 * (sq[0] + sq[-1]))
    return float(np.sum(integral / sigma**2))


def scan_windows(theta, sigma, dt, window_steps, stride_steps=1):
    """Fisher value of every window start on the stride grid, in order."""
    n = theta.shape[0]
    if window_steps < 1 or window_steps >= n:
        raise DomainError(f"window of {window_steps} steps does not fit in {n - 1} steps")
    starts = np.arange(0, n - window_steps, stride_steps)
    values = np.array([fisher(theta[i:i + window_steps + 1], sigma, dt) for i in starts])
    return starts, values


def rank_windows(starts, values):
    """Indices of ``values`` sorted descending, ties kept in start order."""
    return np.argsort(-values, kind="stable")


@dataclass(eq=False)
class SensitivityRun:
    """Long LOM run at the prior diffusivity used for window selection."""

    system: object
    scaling: object
    solution: object
    sigma: np.ndarray
    step_h: float


def sensitivity_run(problem, layout, scaling, p_apr, n_nodes, dt, sample_step, uncertainty):
    """Integrate the whole sequence at ``p_apr`` and derive sensor uncertainties.

    ``dt`` and ``sample_step`` are in seconds; the output grid is every
    ``sample_step``.
    """
    system = assemble_lom(problem, layout, n_nodes)
    forcing = BoundaryForcing.from_problem(problem, scaling)
    init = nondimensionalize(problem.initial(system.nodes * problem.length), scaling)
    every = int(round(sample_step / dt))
    if every < 1 or not np.isclose(every * dt, sample_step):
        raise DomainError("sampling step must be a whole number of solver steps")
    fo = scaling.fourier(p_apr, problem.length)
    sol = integrate_lom(system, fo, forcing, init, dt / scaling.t_ref,
                        t_end=problem.final_time / scaling.t_ref, every=every, keep_field=True)
    sigma = sensor_uncertainty(sol, system, scaling, uncertainty)
    return SensitivityRun(system, scaling, sol, sigma, sample_step / 3600.0)


def search_window(run, length_days, stride_hours=1.0):
    """Rank every window of ``length_days`` on the stride grid.

    Returns the plans sorted by criterion (descending, earliest start first on
    ties) with ``psi`` normalized by the best value.
    """
    step_h = run.step_h
    window_steps = _steps(length_days * 24.0, step_h, "window length")
    stride = _steps(stride_hours, step_h, "stride")
    total_h = (run.solution.t.size - 1) * step_h
    if length_days * 24.0 > total_h + 1e-9:
        raise DomainError(f"window of {length_days} d exceeds the {total_h / 24:.3g} d sequence")
    sigma_u = run.sigma / run.scaling.T_ref
    dt_star = step_h * 3600.0 / run.scaling.t_ref
    starts, values = scan_windows(run.solution.ytheta, sigma_u, dt_star, window_steps, stride)
    order = rank_windows(starts, values)
    best = values[order[0]]
    sig = tuple(float(s) for s in run.sigma)
    plans = []
    for i in order:
        psi = values[i] / best if best > 0 else 0.0
        plans.append(MeasurementPlan(t_ini=float(starts[i] * step_h / 24.0), length=float(length_days),
                                     sigma=sig, psi_raw=float(values[i]), psi=float(psi)))
    return plans


def criterion_vs_length(run, lengths_days, stride_hours=1.0, cost_per_hour=1.0):
    """Best-window criterion per window length.

    Rows are ``(length_days, psi_raw, cost)`` where ``cost`` is the ROM
    integration cost, proportional to the window length (``cost_per_hour``
    per simulated hour).
    """
    rows = []
    for length in lengths_days:
        best = search_window(run, length, stride_hours)[0]
        rows.append((float(length), best.psi_raw, cost_per_hour * length * 24.0))
    return rows


def _steps(hours, step_h, what):
    n = int(round(hours / step_h))
    if n < 1 or not np.isclose(n * step_h, hours):
        raise DomainError(f"{what} of {hours} h is not a multiple of the {step_h} h sampling step")
    return n
