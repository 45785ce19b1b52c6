"""Accuracy, reliability and cost metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, DomainError

HIST_BINS = 50
HIST_SPAN = 4.0


def _pair(u, ref):
    u = np.asarray(u, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if u.shape != ref.shape:
        raise AlignmentError(f"shapes {u.shape} and {ref.shape} differ")
    return u, ref


def eps2(u, u_ref):
    """Root-mean-square deviation over every sensor and time sample."""
    u, ref = _pair(u, u_ref)
    return float(np.sqrt(np.mean((u - ref) ** 2)))


def eps2_per_sensor(u, u_ref):
    u, ref = _pair(u, u_ref)
    return np.sqrt(np.mean((u - ref) ** 2, axis=0))


def eps_inf(u, u_ref):
    u, ref = _pair(u, u_ref)
    return float(np.abs(u - ref).max())


def eps_r(p, p_ref):
    if p_ref == 0:
        raise DomainError("reference parameter must be non-zero")
    return (p - p_ref) / p_ref


def cpu_ratio(t_run, t_baseline):
    if not t_baseline > 0:
        raise DomainError("baseline time must be positive")
    return t_run / t_baseline


@dataclass
class ErrorReport:
    eps2: float
    eps_inf: float
    eps2_sensors: np.ndarray
    eps_r: float | None = None
    t_cpu: float | None = None
    t_cpu_ratio: float | None = None
    units: str = "dimensionless"

    @classmethod
    def compare(cls, u, u_ref, **extra):
        return cls(eps2(u, u_ref), eps_inf(u, u_ref), eps2_per_sensor(u, u_ref), **extra)


def boundary_gradient(field, dx, side="right"):
    """One-sided three-point derivative at a face of a uniformly spaced field.

    ``field`` has the space axis last and includes the face values.
    """
    f = np.asarray(field, dtype=float)
    if f.shape[-1] < 3:
        raise DomainError("need at least three points across the wall")
    if side == "right":
        return (3.0 * f[..., -1] - 4.0 * f[..., -2] + f[..., -3]) / (2.0 * dx)
    if side == "left":
        return (-3.0 * f[..., 0] + 4.0 * f[..., 1] - f[..., 2]) / (2.0 * dx)
    raise DomainError(f"side must be 'left' or 'right', got {side!r}")


def heat_flux(field, conductivity, length, side="right"):
    """Conductive flux ``-k dT/dx`` (W/m2) at one face.

    Parameters
    ----------
    field : ndarray, shape (n_t, N + 2)
        Temperatures in degC at equally spaced nodes including both faces.
    conductivity : float
    length : float
        Wall thickness in metres.
    side : {'right', 'left'}
        Face where the flux is evaluated; positive flux points towards ``+x``.
    """
    if field is None:
        raise DomainError("the interior field is required to compute a heat flux")
    f = np.asarray(field, dtype=float)
    dx = length / (f.shape[-1] - 1)
    return -conductivity * boundary_gradient(f, dx, side)


def thermal_loads(flux, times):
    """Trapezoid time integral of the flux (J/m2), ``times`` in seconds."""
    flux = np.asarray(flux, dtype=float)
    t = np.asarray(times, dtype=float)
    if flux.shape != t.shape:
        raise AlignmentError("flux and time series differ in length")
    return float(np.sum(0.5 * (flux[1:] + flux[:-1]) * np.diff(t)))


@dataclass
class FluxReport:
    flux: np.ndarray
    loads: float
    perturbed: dict

    def relative_changes(self):
        """Relative change of the loads for each perturbation factor."""
        return {f: (E - self.loads) / self.loads for f, E in self.perturbed.items()}


@dataclass
class ResidualSummary:
    """Per-sensor residual statistics and histograms (units of the inputs)."""

    mean: np.ndarray
    std: np.ndarray
    noise_std: np.ndarray
    edges: list
    counts: list
    bins: int = HIST_BINS
    span: float = HIST_SPAN


def residual_distribution(predictions, observations, sigma=None):
    """Distribution of ``prediction - observation`` for each sensor.

    Histograms use ``HIST_BINS`` uniform bins over ``+-HIST_SPAN`` observed
    standard deviations around the mean; a zero spread collapses to a single
    bin at the mean.
    """
    pred, obs = _pair(predictions, observations)
    res = pred - obs
    if res.ndim == 1:
        res = res[:, None]
    mean = res.mean(axis=0)
    std = res.std(axis=0)
    edges, counts = [], []
    for s in range(res.shape[1]):
        width = HIST_SPAN * std[s]
        if width == 0:
            width = max(abs(mean[s]) * 1e-12, 1e-300)
        c, e = np.histogram(res[:, s], bins=HIST_BINS, range=(mean[s] - width, mean[s] + width))
        edges.append(e)
        counts.append(c)
    noise = np.zeros(res.shape[1]) if sigma is None else np.broadcast_to(
        np.asarray(sigma, dtype=float), (res.shape[1],)).copy()
    return ResidualSummary(mean=mean, std=std, noise_std=noise, edges=edges, counts=counts)
