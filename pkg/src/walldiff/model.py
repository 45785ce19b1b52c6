"""Large original model (LOM) of one-dimensional heat diffusion in a wall.

The wall occupies ``x in [0, L]`` with prescribed (Dirichlet) temperatures on
both faces.  Everything is solved in dimensionless form::

    u = (T - T_min) / T_ref,   x* = x / L,   t* = t / t_ref,
    du/dt* = Fo d2u/dx*2,      Fo = t_ref * alpha / L**2

together with the sensitivity ``theta = du/dFo`` which obeys the same
operator plus the source ``d2u/dx*2`` and homogeneous boundary and initial
conditions.  Dirichlet nodes are removed from the state: the state holds the
``N`` interior nodes and the boundary values enter through ``B @ Q``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse

from .errors import (
    DomainError,
    IntegrationError,
    LayoutError,
    ScalingError,
    StabilityError,
)

STABILITY_LIMIT = 0.5


# ---------------------------------------------------------------------------
# Problem description
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InitialProfile:
    """Polynomial initial temperature ``T(x) = c0 + c1 x + c2 x**2`` (degC, x in m)."""

    coeffs: tuple[float, ...]

    @classmethod
    def from_lengths(cls, T0, l1=None, l2=None):
        """Build ``T0 * (1 + x/l1 - (x/l2)**2)``; a missing length drops its term."""
        c1 = T0 / l1 if l1 is not None else 0.0
        c2 = -T0 / l2**2 if l2 is not None else 0.0
        return cls((float(T0), float(c1), float(c2)))

    @classmethod
    def uniform(cls, T):
        return cls((float(T), 0.0, 0.0))

    @classmethod
    def fit(cls, x, T, length, left, right, degree=2):
        """Fit a profile pinned to the two face temperatures.

        The fit passes exactly through ``left`` at ``x=0`` and ``right`` at
        ``x=length`` so the initial and boundary conditions stay compatible;
        with ``degree=2`` the curvature is the least-squares fit to the
        interior readings ``(x, T)``.
        """
        x = np.asarray(x, dtype=float)
        T = np.asarray(T, dtype=float)
        slope = (right - left) / length
        c2 = 0.0
        if degree == 2:
            bump = x * (x - length)
            resid = T - (left + slope * x)
            c2 = float(bump @ resid / (bump @ bump))
        elif degree != 1:
            raise DomainError(f"degree must be 1 or 2, got {degree}")
        # c2 * x (x - L) expands into a linear correction
        return cls((float(left), float(slope - c2 * length), c2))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for p, c in enumerate(self.coeffs):
            out = out + c * x**p
        return out

    def lengths(self):
        """Return ``(T0, l1, l2)`` of the product form, ``None`` where absent."""
        c0, c1, c2 = (tuple(self.coeffs) + (0.0, 0.0))[:3]
        l1 = c0 / c1 if c1 else None
        l2 = float(np.sqrt(-c0 / c2)) if c2 and -c0 / c2 > 0 else None
        return c0, l1, l2


@dataclass(frozen=True, eq=False)
class WallProblem:
    """Geometry, material and measured boundary signals of one wall.

    ``times`` are seconds; ``T_left`` is applied at ``x = 0`` and ``T_right``
    at ``x = length``.  Between samples the signals are linear in time.
    """

    length: float
    conductivity: float
    heat_capacity: float
    times: np.ndarray
    T_left: np.ndarray
    T_right: np.ndarray
    initial: InitialProfile
    final_time: float | None = None
    compat_tol: float = 0.5

    def __post_init__(self):
        for name in ("length", "conductivity", "heat_capacity"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "T_left", np.asarray(self.T_left, dtype=float))
        object.__setattr__(self, "T_right", np.asarray(self.T_right, dtype=float))
        if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
            raise DomainError("boundary times must be strictly increasing with >= 2 samples")
        if self.T_left.shape != times.shape or self.T_right.shape != times.shape:
            raise DomainError("boundary signals must match the time samples")
        tf = times[-1] if self.final_time is None else float(self.final_time)
        if not tf > 0:
            raise DomainError("final time must be positive")
        if times[0] > 0 or times[-1] < tf:
            raise DomainError("boundary signals must cover [0, final_time]")
        object.__setattr__(self, "final_time", tf)

        mismatch = max(abs(self.initial(0.0) - self.T_left[0]),
                       abs(self.initial(self.length) - self.T_right[0]))
        if mismatch > self.compat_tol:
            warnings.warn(
                f"initial profile and boundary values differ by {mismatch:.3g} degC at t=0",
                stacklevel=2,
            )

    @property
    def diffusivity(self):
        return self.conductivity / self.heat_capacity

    def with_diffusivity(self, alpha):
        """Same wall with conductivity kept and heat capacity set to ``k / alpha``."""
        return replace(self, heat_capacity=self.conductivity / alpha)

    def window(self, start, stop, initial=None):
        """Restrict to ``[start, stop]`` seconds, re-origined at ``start``."""
        tt = self.times
        inner = tt[(tt > start) & (tt < stop)]
        t = np.concatenate([[start], inner, [stop]])
        return replace(
            self,
            times=t - start,
            T_left=np.interp(t, tt, self.T_left),
            T_right=np.interp(t, tt, self.T_right),
            initial=self.initial if initial is None else initial,
            final_time=stop - start,
        )


@dataclass(frozen=True)
class DimensionlessScaling:
    T_ref: float
    T_min: float
    t_ref: float = 3600.0

    def __post_init__(self):
        if not self.T_ref > 0:
            raise ScalingError(f"T_ref must be positive, got {self.T_ref}")
        if not self.t_ref > 0:
            raise ScalingError(f"t_ref must be positive, got {self.t_ref}")

    @classmethod
    def from_series(cls, *series, t_ref=3600.0):
        """``T_min`` and ``T_ref`` spanning every provided temperature series."""
        values = np.concatenate([np.ravel(np.asarray(s, dtype=float)) for s in series])
        lo, hi = float(values.min()), float(values.max())
        if hi <= lo:
            hi = lo + 1.0
        return cls(T_ref=hi - lo, T_min=lo, t_ref=t_ref)

    def fourier(self, alpha, length):
        return fourier_number(alpha, self.t_ref, length)

    def diffusivity(self, fo, length):
        return fo * length**2 / self.t_ref


def nondimensionalize(T, scaling):
    if scaling.T_ref == 0:
        raise ScalingError("T_ref must be non-zero")
    return (np.asarray(T, dtype=float) - scaling.T_min) / scaling.T_ref


def redimensionalize(u, scaling):
    return np.asarray(u, dtype=float) * scaling.T_ref + scaling.T_min


def fourier_number(alpha, t_ref, length):
    if not (alpha > 0 and t_ref > 0 and length > 0):
        raise DomainError(
            f"Fourier number needs positive inputs, got alpha={alpha}, t_ref={t_ref}, L={length}"
        )
    return t_ref * alpha / length**2


@dataclass(frozen=True)
class SensorLayout:
    positions: tuple[float, ...]

    def __post_init__(self):
        pos = tuple(float(p) for p in np.atleast_1d(self.positions))
        if len(pos) < 1:
            raise LayoutError("at least one sensor is required")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise LayoutError(f"sensor positions must be strictly increasing: {pos}")
        object.__setattr__(self, "positions", pos)

    @property
    def count(self):
        return len(self.positions)


# ---------------------------------------------------------------------------
# Semi-discrete system
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StateSpaceSystem:
    """Semi-discrete LOM matrices; immutable once assembled."""

    n_nodes: int
    dx: float
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    length: float
    positions: tuple[float, ...]
    _A_sparse: sparse.csr_matrix = field(repr=False, default=None)

    @property
    def nodes(self):
        """Dimensionless positions of the interior nodes."""
        return self.dx * np.arange(1, self.n_nodes + 1)

    @property
    def n_sensors(self):
        return self.C.shape[0]

    def steady_profile(self, q):
        """Interior steady state ``-A^-1 B q`` for fixed boundary values ``q``.

        For this stencil the discrete steady state is exactly the straight
        line between the two boundary values.
        """
        q = np.asarray(q, dtype=float)
        return q[..., :1] + (q[..., 1:] - q[..., :1]) * self.nodes

    def sensor_steady(self, q):
        xs = np.asarray(self.positions) / self.length
        q = np.asarray(q, dtype=float)
        return q[..., :1] + (q[..., 1:] - q[..., :1]) * xs

    def max_stable_step(self, fo):
        return STABILITY_LIMIT * self.dx**2 / fo


def interpolation_matrix(positions, length, n_nodes):
    """Rows of linear-interpolation weights from interior nodes to sensors."""
    dx = 1.0 / (n_nodes + 1)
    C = np.zeros((len(positions), n_nodes))
    for i, xs in enumerate(positions):
        if not 0.0 < xs < length:
            raise LayoutError(f"sensor at {xs} m lies outside (0, {length}) m")
        s = xs / length / dx  # fractional node index, node j sits at s = j
        j = int(np.floor(s))
        w = s - j
        if np.isclose(w, 1.0, rtol=0, atol=1e-9):
            j, w = j + 1, 0.0
        elif np.isclose(w, 0.0, rtol=0, atol=1e-9):
            w = 0.0
        if j < 1 or (j == n_nodes and w > 0) or j > n_nodes:
            # sensor between a face and the first/last node: the face value is
            # outside the state, so use the two nearest interior nodes instead
            j = min(max(j, 1), n_nodes - 1)
            w = s - j
        C[i, j - 1] += 1.0 - w
        if w:
            C[i, j] += w
    return C


def assemble_lom(problem, layout, n_nodes, scaling=None):
    """Build ``A``, ``B`` and ``C`` for ``n_nodes`` interior nodes.

    ``scaling`` does not enter the matrices (the operator is written in
    ``x* = x/L``); it is accepted so callers can pass one object around.
    """
    if n_nodes < 3:
        raise DomainError(f"need at least 3 interior nodes, got {n_nodes}")
    length = problem.length if isinstance(problem, WallProblem) else float(problem)
    dx = 1.0 / (n_nodes + 1)
    main = -2.0 * np.ones(n_nodes)
    off = np.ones(n_nodes - 1)
    A_sp = sparse.diags([off, main, off], [-1, 0, 1], format="csr") / dx**2
    B = np.zeros((n_nodes, 2))
    B[0, 0] = 1.0 / dx**2
    B[-1, 1] = 1.0 / dx**2
    C = interpolation_matrix(layout.positions, length, n_nodes)
    return StateSpaceSystem(
        n_nodes=n_nodes, dx=dx, A=A_sp.toarray(), B=B, C=C,
        length=length, positions=layout.positions, _A_sparse=A_sp,
    )


# ---------------------------------------------------------------------------
# Forcing and integration
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BoundaryForcing:
    """Dimensionless boundary values ``Q(t*) = [u_left, u_right]``, linear in time."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float).reshape(len(t), 2)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_problem(cls, problem, scaling):
        return cls(
            problem.times / scaling.t_ref,
            np.column_stack([nondimensionalize(problem.T_left, scaling),
                             nondimensionalize(problem.T_right, scaling)]),
        )

    @property
    def end(self):
        return float(self.times[-1])

    def at(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([np.interp(t, self.times, self.values[:, 0]),
                         np.interp(t, self.times, self.values[:, 1])], axis=-1)

    def step_values(self, dt, n_steps):
        """Forcing at step starts and midpoints, shapes ``(n_steps, 2)``."""
        tn = dt * np.arange(n_steps)
        return self.at(tn), self.at(tn + 0.5 * dt)


@dataclass(eq=False)
class ObservableSolution:
    """Sensor series of the field and its Fo-sensitivity on a shared time grid."""

    t: np.ndarray
    yu: np.ndarray
    ytheta: np.ndarray
    source: str
    field: np.ndarray | None = None
    boundary: np.ndarray | None = None

    def __post_init__(self):
        if self.yu.shape != self.ytheta.shape or self.yu.shape[0] != self.t.shape[0]:
            raise IntegrationError("field and sensitivity series must share the time grid")

    def full_field(self):
        """Interior field with the two boundary values attached, ``(n_t, N + 2)``."""
        if self.field is None or self.boundary is None:
            raise DomainError("solution was computed without keeping the interior field")
        return np.column_stack([self.boundary[:, 0], self.field, self.boundary[:, 1]])


def _n_steps(dt, t_end):
    n = int(round(t_end / dt))
    if n < 1 or not np.isclose(n * dt, t_end, rtol=1e-9, atol=1e-12):
        raise DomainError(f"horizon {t_end} is not a whole number of steps of {dt}")
    return n


def check_stability(system, fo, dt):
    ratio = fo * dt / system.dx**2
    if ratio > STABILITY_LIMIT * (1 + 1e-12):
        suggested = system.max_stable_step(fo)
        raise StabilityError(
            f"Fo*dt/dx^2 = {ratio:.4f} exceeds {STABILITY_LIMIT}; use dt* <= {suggested:.6g}",
            suggested,
        )


def integrate_lom(system, fo, forcing, init, dt, t_end=None, every=1, keep_field=False):
    """Advance the field and its sensitivity with the explicit midpoint rule.

    Parameters
    ----------
    system : StateSpaceSystem
    fo : float
        Fourier number.
    forcing : BoundaryForcing
        Dimensionless boundary values; must cover ``[0, t_end]``.
    init : array_like, shape (N,)
        Dimensionless initial interior field.
    dt : float
        Dimensionless time step.
    t_end : float, optional
        Horizon, defaults to the end of the forcing.
    every : int
        Keep one output every ``every`` steps (the first and last are always
        on the output grid when the horizon is a multiple of ``every``).
    keep_field : bool
        Also return the interior field at output steps.

    Returns
    -------
    ObservableSolution
    """
    check_stability(system, fo, dt)
    t_end = forcing.end if t_end is None else t_end
    if t_end > forcing.end * (1 + 1e-12) + 1e-12:
        raise DomainError(f"forcing ends at {forcing.end}, before horizon {t_end}")
    n_steps = _n_steps(dt, t_end)
    A = system._A_sparse
    if A is None:
        A = sparse.csr_matrix(system.A)
    b0 = system.B[0, 0]
    b1 = system.B[-1, 1]
    qn, qm = forcing.step_values(dt, n_steps)

    Z = np.zeros((system.n_nodes, 2))
    Z[:, 0] = np.asarray(init, dtype=float)
    if Z[:, 0].shape != (system.n_nodes,):
        raise DomainError("initial field must have one value per interior node")

    def rhs(Z, q):
        s = A @ Z
        s[0, 0] += b0 * q[0]
        s[-1, 0] += b1 * q[1]
        out = fo * s
        out[:, 1] += s[:, 0]
        return out

    out_idx = np.arange(0, n_steps + 1, every)
    n_out = out_idx.size
    C = system.C
    yu = np.empty((n_out, C.shape[0]))
    yt = np.empty((n_out, C.shape[0]))
    fld = np.empty((n_out, system.n_nodes)) if keep_field else None
    yu[0] = C @ Z[:, 0]
    yt[0] = C @ Z[:, 1]
    if keep_field:
        fld[0] = Z[:, 0]
    k = 1
    half = 0.5 * dt
    for n in range(n_steps):
        Zm = Z + half * rhs(Z, qn[n])
        Z = Z + dt * rhs(Zm, qm[n])
        if (n + 1) % every == 0:
            if not np.isfinite(Z).all():
                raise IntegrationError(f"non-finite state at step {n + 1}", step=n + 1)
            yu[k] = C @ Z[:, 0]
            yt[k] = C @ Z[:, 1]
            if keep_field:
                fld[k] = Z[:, 0]
            k += 1
    if not np.isfinite(Z).all():
        raise IntegrationError(f"non-finite state at step {n_steps}", step=n_steps)
    t_out = dt * out_idx
    return ObservableSolution(
        t=t_out, yu=yu, ytheta=yt, source="LOM", field=fld,
        boundary=forcing.at(t_out) if keep_field else None,
    )


def sensitivity_check(system, fo, forcing, init, dt, dfo=None, t_end=None, every=1):
    """Largest deviation between the sensitivity and a central difference in Fo.

    The deviation is taken relative to the largest sensitivity magnitude so
    zero crossings of ``theta`` do not blow it up; both sides vanishing gives 0.
    """
    dfo = 1e-4 * fo if dfo is None else dfo
    base = integrate_lom(system, fo, forcing, init, dt, t_end, every)
    up = integrate_lom(system, fo + dfo, forcing, init, dt, t_end, every)
    down = integrate_lom(system, fo - dfo, forcing, init, dt, t_end, every)
    fd = (up.yu - down.yu) / (2 * dfo)
    scale = np.abs(base.ytheta).max()
    dev = np.abs(base.ytheta - fd).max()
    if scale == 0:
        return float(dev)
    return float(dev / scale)


def spatial_gradient(system, full_field, x):
    """``du/dx*`` at physical positions ``x`` from a field with boundary columns.

    Nodal gradients use second-order differences (one-sided at the faces) and
    are interpolated linearly to ``x``.
    """
    grid = system.dx * np.arange(system.n_nodes + 2)
    grad = np.gradient(full_field, system.dx, axis=-1, edge_order=2)
    xs = np.atleast_1d(np.asarray(x, dtype=float)) / system.length
    return np.stack([np.array([np.interp(p, grid, g) for g in np.atleast_2d(grad)]) for p in xs],
                    axis=-1)
