"""Modal-identification reduced-order model (ROM).

The reduced system is diagonal::

    dX/dt*  = Fo F X  + Fo G Q'
    dXt/dt* = Fo F Xt + F X + G Q'
    y_u     = y0 + H_u X,     y_theta = H_t Xt

written in deviation variables: ``Q' = Q(t) - Q(0)`` and ``y0`` is the
straight-line steady profile of the initial boundary values read at the
sensors.  The field deviation starts at ``x0`` (zero when the initial field is
that steady profile) and the sensitivity state always starts at zero.  Because
the system is linear and homogeneous in the deviations, a trained model is
independent of the temperature offset and scale, apart from ``x0`` which is
stored in degC.

Time stepping is the explicit midpoint rule with the forcing sampled exactly
as in the large model; per mode it collapses to first-order recurrences that
run through :func:`scipy.signal.lfilter`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import lfilter

from .errors import AlignmentError, DomainError, IntegrationError, LearningError, OrderError
from .model import (
    BoundaryForcing,
    ObservableSolution,
    StateSpaceSystem,
    _n_steps,
    integrate_lom,
)
from .swarm import SwarmConfig, particle_swarm


@dataclass(frozen=True, eq=False)
class ReducedSystem:
    """Trained diagonal ROM.

    ``x0`` is the initial field-deviation state in degC; divide by ``T_ref``
    of the scaling in use before integrating (``integrate_rom`` does this when
    given ``T_ref``).
    """

    F: np.ndarray
    G: np.ndarray
    H_u: np.ndarray
    H_t: np.ndarray
    positions: tuple[float, ...]
    length: float
    t_ref: float
    x0: np.ndarray | None = None
    record: dict = field(default_factory=dict)

    def __post_init__(self):
        F = np.asarray(self.F, dtype=float).ravel()
        object.__setattr__(self, "F", F)
        r = F.size
        if r < 1:
            raise OrderError("reduced order must be at least 1")
        if not np.all(F < 0):
            raise DomainError("every diagonal entry of F must be negative")
        G = np.asarray(self.G, dtype=float).reshape(r, 2)
        Hu = np.asarray(self.H_u, dtype=float).reshape(-1, r)
        Ht = np.asarray(self.H_t, dtype=float).reshape(-1, r)
        if Hu.shape != Ht.shape or Hu.shape[0] != len(self.positions):
            raise DomainError("output matrices must have one row per sensor")
        x0 = np.zeros(r) if self.x0 is None else np.asarray(self.x0, dtype=float).reshape(r)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "H_u", Hu)
        object.__setattr__(self, "H_t", Ht)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "positions", tuple(float(p) for p in self.positions))

    @property
    def order(self):
        return self.F.size

    @property
    def n_sensors(self):
        return self.H_u.shape[0]

    def sensor_steady(self, q):
        xs = np.asarray(self.positions) / self.length
        q = np.asarray(q, dtype=float)
        return q[..., :1] + (q[..., 1:] - q[..., :1]) * xs


def _mode_states(F, G, fo, qn, qm, dt, x0):
    """Reduced field and sensitivity states on every step, ``(n+1, r)`` each."""
    n = qn.shape[0]
    r = F.size
    X = np.empty((n + 1, r))
    Xt = np.empty((n + 1, r))
    gn = qn @ G.T
    gm = qm @ G.T
    den = np.zeros(2)
    den[0] = 1.0
    inp = np.empty(n + 1)
    for i in range(r):
        z = dt * fo * F[i]
        a = 1.0 + z + 0.5 * z * z
        den[1] = -a
        inp[0] = x0[i]
        inp[1:] = dt * fo * (0.5 * z * gn[:, i] + gm[:, i])
        x = lfilter([1.0], den, inp)
        X[:, i] = x
        inp[0] = 0.0
        inp[1:] = (1.0 + z) * dt * F[i] * x[:-1] + dt * (z * gn[:, i] + gm[:, i])
        Xt[:, i] = lfilter([1.0], den, inp)
    return X, Xt


def _deviation_inputs(forcing, dt, n_steps):
    qn, qm = forcing.step_values(dt, n_steps)
    q0 = forcing.at(0.0)
    return qn - q0, qm - q0, q0


def integrate_rom(reduced, fo, forcing, dt, t_end=None, every=1, x0=None, T_ref=None):
    """Run the reduced model on the same grid and forcing samples as the LOM.

    Parameters
    ----------
    reduced : ReducedSystem
    fo : float
        Fourier number.
    forcing : BoundaryForcing
    dt : float
        Dimensionless step.
    t_end : float, optional
        Horizon, defaults to the end of the forcing.
    every : int
        Output decimation.
    x0 : ndarray, optional
        Dimensionless initial field-deviation state; overrides the stored one.
    T_ref : float, optional
        Scale used to convert the stored ``x0`` (degC) to dimensionless form.
        Without it the stored state is ignored and the run starts at rest.
    """
    if fo <= 0:
        raise DomainError(f"Fourier number must be positive, got {fo}")
    t_end = forcing.end if t_end is None else t_end
    n = _n_steps(dt, t_end)
    qn, qm, q0 = _deviation_inputs(forcing, dt, n)
    if x0 is None:
        x0 = reduced.x0 / T_ref if T_ref is not None else np.zeros(reduced.order)
    X, Xt = _mode_states(reduced.F, reduced.G, fo, qn, qm, dt, np.asarray(x0, dtype=float))
    idx = np.arange(0, n + 1, every)
    yu = X[idx] @ reduced.H_u.T + reduced.sensor_steady(q0)
    yt = Xt[idx] @ reduced.H_t.T
    if not (np.isfinite(yu).all() and np.isfinite(yt).all()):
        bad = np.flatnonzero(~np.isfinite(yu).all(1) | ~np.isfinite(yt).all(1))
        step = int(idx[bad[0]])
        raise IntegrationError(f"non-finite reduced state at step {step}", step=step)
    return ObservableSolution(t=dt * idx, yu=yu, ytheta=yt, source="ROM")


# ---------------------------------------------------------------------------
# Learning data
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class TrainingCase:
    alpha: float
    fo: float
    forcing: BoundaryForcing
    init: np.ndarray
    reference: ObservableSolution
    label: str = ""


@dataclass(eq=False)
class LearningSet:
    """Training cases sharing one wall, sensor layout, scaling and time grid.

    ``system`` is the LOM the references came from; it supplies the modal
    basis used to initialize a ROM.
    """

    system: StateSpaceSystem
    cases: list
    dt: float
    T_ref: float
    t_ref: float
    every: int = 1

    def __post_init__(self):
        if len(self.cases) < 1:
            raise DomainError("a learning set needs at least one case")
        t0 = self.cases[0].reference.t
        for c in self.cases[1:]:
            if c.reference.t.shape != t0.shape or not np.allclose(c.reference.t, t0):
                raise AlignmentError("all training cases must share one time grid")
            if c.reference.yu.shape[1] != self.cases[0].reference.yu.shape[1]:
                raise AlignmentError("all training cases must share one sensor layout")

    @property
    def diffusivities(self):
        return sorted({float(c.alpha) for c in self.cases})

    @classmethod
    def build(cls, system, entries, scaling, dt, every=1):
        """Run the LOM for each ``(alpha, forcing, init, label)`` entry."""
        cases = []
        for alpha, forcing, init, label in entries:
            fo = scaling.fourier(alpha, system.length)
            ref = integrate_lom(system, fo, forcing, init, dt, every=every)
            cases.append(TrainingCase(alpha, fo, forcing, np.asarray(init, float), ref, label))
        return cls(system, cases, dt, scaling.T_ref, scaling.t_ref, every)


def _initial_deviation(system, case):
    return case.init - system.steady_profile(case.forcing.at(0.0))


def init_from_modal(system, order, layout=None):
    """ROM from the ``order`` slowest eigenmodes of the LOM.

    With ``order == N`` the ROM is a similarity transform of the LOM and
    reproduces it to rounding error.
    """
    n = system.n_nodes
    if not 1 <= order <= n:
        raise OrderError(f"order must lie in [1, {n}], got {order}")
    lam, vec = np.linalg.eigh(system.A)
    keep = np.argsort(lam)[::-1][:order]
    M = vec[:, keep]
    H = system.C @ M
    positions = layout.positions if layout is not None else system.positions
    return ReducedSystem(F=lam[keep], G=M.T @ system.B, H_u=H, H_t=H.copy(),
                         positions=positions, length=system.length, t_ref=np.nan,
                         record={"basis": M})


# ---------------------------------------------------------------------------
# Learning functional
# ---------------------------------------------------------------------------

def _trapezoid_weights(n, dt):
    w = np.full(n, dt)
    w[0] = w[-1] = 0.5 * dt
    return w


@dataclass(eq=False)
class _Prepared:
    """Per-case arrays reused across every candidate evaluation."""

    fo: float
    qn: np.ndarray
    qm: np.ndarray
    y0: np.ndarray
    yu: np.ndarray
    yt: np.ndarray
    wu: np.ndarray
    wt: np.ndarray
    dt: float


def _prepare(learning, floor, floor_scope):
    """Residual weights ``sqrt(trapezoid) / denominator`` for each case."""
    refs = [c.reference for c in learning.cases]
    if floor_scope == "global":
        gu = max(np.abs(r.yu).max() for r in refs)
        gt = max(np.abs(r.ytheta).max() for r in refs)
    elif floor_scope != "local":
        raise DomainError(f"floor_scope must be 'global' or 'local', got {floor_scope!r}")
    prepared = []
    n_steps = _n_steps(learning.dt, float(refs[0].t[-1]))
    for c, ref in zip(learning.cases, refs):
        qn, qm, q0 = _deviation_inputs(c.forcing, learning.dt, n_steps)
        if floor_scope == "global":
            fu, ft = floor * gu, floor * gt
        else:
            fu = floor * np.abs(ref.yu).max(0)
            ft = floor * np.abs(ref.ytheta).max(0)
        du = np.maximum(np.maximum(np.abs(ref.yu), fu), 1e-300)
        dth = np.maximum(np.maximum(np.abs(ref.ytheta), ft), 1e-300)
        sw = np.sqrt(_trapezoid_weights(ref.t.size, learning.dt * learning.every))[:, None]
        prepared.append(_Prepared(c.fo, qn, qm, learning.system.sensor_steady(q0),
                                  ref.yu, ref.ytheta, sw / du, sw / dth, learning.dt))
    return prepared


def _residuals(F, G, Hu, Ht, x0, prepared, every):
    out = []
    for p in prepared:
        X, Xt = _mode_states(F, G, p.fo, p.qn, p.qm, p.dt, x0)
        X, Xt = X[::every], Xt[::every]
        out.append((p.wu * (X @ Hu.T + p.y0 - p.yu)).ravel())
        out.append((p.wt * (Xt @ Ht.T - p.yt)).ravel())
    return np.concatenate(out)


def j_rom(candidate, learning, floor=0.1, floor_scope="global"):
    """Relative squared residues of the ROM against the learning references.

    Residues of ``u`` and ``theta`` are divided by the reference magnitude,
    floored at ``floor`` times the largest reference magnitude: over the
    whole set (``floor_scope='global'``) or per case and sensor (``'local'``).
    The time integral uses the trapezoid rule.
    """
    if candidate.n_sensors != learning.cases[0].reference.yu.shape[1]:
        raise AlignmentError("candidate and learning set have different sensor counts")
    prepared = _prepare(learning, floor, floor_scope)
    x0 = candidate.x0 / learning.T_ref
    r = _residuals(candidate.F, candidate.G, candidate.H_u, candidate.H_t, x0,
                   prepared, learning.every)
    return float(r @ r) if np.isfinite(r).all() else np.inf


# ---------------------------------------------------------------------------
# Learning
# ---------------------------------------------------------------------------

def _block_bounds(values, scale):
    """``values +- scale*|values|`` with near-zero entries given a usable width."""
    mag = np.abs(values)
    floor = 0.1 * mag.max() if mag.size and mag.max() > 0 else 1.0
    half = scale * np.maximum(mag, floor)
    return values - half, values + half


def _solve_outputs(X_list, Xt_list, prepared, every):
    """Weighted linear least squares for ``H_u`` and ``H_t`` given the states."""
    ns = prepared[0].yu.shape[1]
    r = X_list[0].shape[1]
    Hu = np.zeros((ns, r))
    Ht = np.zeros((ns, r))
    for s in range(ns):
        Au = np.vstack([p.wu[:, s:s + 1] * X[::every] for p, X in zip(prepared, X_list)])
        bu = np.concatenate([p.wu[:, s] * (p.yu[:, s] - p.y0[s]) for p in prepared])
        At = np.vstack([p.wt[:, s:s + 1] * Xt[::every] for p, Xt in zip(prepared, Xt_list)])
        bt = np.concatenate([p.wt[:, s] * p.yt[:, s] for p in prepared])
        Hu[s] = np.linalg.lstsq(Au, bu, rcond=None)[0]
        Ht[s] = np.linalg.lstsq(At, bt, rcond=None)[0]
    return Hu, Ht


def learn(learning, order, cfg=None, polish=True, floor=0.1, floor_scope="global",
          fit_x0=None, polish_evals=400, min_diffusivities=2):
    """Train a ROM of the given order on a learning set.

    A particle swarm searches the log-rates ``phi`` (``F = -exp(phi)``), ``G``,
    ``H_u``, ``H_t`` and, when the initial field is not the steady profile,
    ``x0``, starting from the modal truncation.  The swarm optimum is then
    polished by a variable-projection least-squares fit: for fixed ``F``,
    ``G`` and ``x0`` the output matrices solve a linear problem, so only the
    dynamics are iterated.  The polish is kept only if it lowers ``J_rom``.

    Parameters
    ----------
    learning : LearningSet
    order : int
    cfg : SwarmConfig, optional
    polish : bool
        Run the variable-projection refinement after the swarm.
    floor, floor_scope
        Residue-denominator floor, see :func:`j_rom`.
    fit_x0 : bool, optional
        Learn the initial reduced state.  Defaults to ``True`` when any case
        starts away from its steady profile.
    polish_evals : int
        Function-evaluation budget of the refinement.
    min_diffusivities : int
        Distinct training diffusivities required; a ROM fitted to a single
        diffusivity cannot represent the Fo dependence.

    Returns
    -------
    ReducedSystem
    """
    cfg = cfg or SwarmConfig()
    if len(learning.diffusivities) < min_diffusivities:
        raise DomainError(f"learning needs at least {min_diffusivities} distinct diffusivities")
    system = learning.system
    modal = init_from_modal(system, order)
    basis = modal.record["basis"]
    prepared = _prepare(learning, floor, floor_scope)
    devs = np.array([_initial_deviation(system, c) for c in learning.cases])
    has_dev = bool(np.abs(devs).max() > 1e-12)
    if fit_x0 is None:
        fit_x0 = has_dev
    if has_dev and np.abs(devs - devs[0]).max() > 1e-9:
        raise DomainError("training cases start from different initial deviations; "
                          "a single reduced initial state cannot fit them")
    x0_init = basis.T @ devs[0]
    ns = modal.n_sensors
    r = order
    every = learning.every

    sizes = [r, 2 * r, ns * r, ns * r] + ([r] if fit_x0 else [])
    cuts = np.cumsum(sizes)[:-1]

    def unpack(v):
        parts = np.split(v, cuts)
        F = -np.exp(parts[0])
        G = parts[1].reshape(r, 2)
        Hu = parts[2].reshape(ns, r)
        Ht = parts[3].reshape(ns, r)
        x0 = parts[4] if fit_x0 else x0_init
        return F, G, Hu, Ht, x0

    def objective(v):
        F, G, Hu, Ht, x0 = unpack(v)
        with np.errstate(all="ignore"):
            res = _residuals(F, G, Hu, Ht, x0, prepared, every)
            val = res @ res
        return val if np.isfinite(val) else np.inf

    phi0 = np.log(-modal.F)
    blocks = [phi0, modal.G.ravel(), modal.H_u.ravel(), modal.H_t.ravel()]
    if fit_x0:
        blocks.append(x0_init)
    v0 = np.concatenate(blocks)
    lo = [phi0 - np.log(cfg.bound_scale)]
    hi = [phi0 + np.log(cfg.bound_scale)]
    for b in blocks[1:]:
        bl, bh = _block_bounds(b, cfg.bound_scale)
        lo.append(bl)
        hi.append(bh)
    swarm = particle_swarm(objective, v0, np.concatenate(lo), np.concatenate(hi), cfg)
    best = swarm.x
    best_val = swarm.value
    j_init = objective(v0)
    polished = False

    if polish:
        dyn_sizes = [r, 2 * r] + ([r] if fit_x0 else [])
        dyn_cuts = np.cumsum(dyn_sizes)[:-1]
        F_b, G_b, _, _, x0_b = unpack(best)
        q0 = np.concatenate([np.log(-F_b), G_b.ravel()] + ([x0_b] if fit_x0 else []))
        n_res = 2 * sum(p.yu.size for p in prepared)

        def states(q):
            parts = np.split(q, dyn_cuts)
            F = -np.exp(parts[0])
            G = parts[1].reshape(r, 2)
            x0 = parts[2] if fit_x0 else x0_init
            Xs = [_mode_states(F, G, p.fo, p.qn, p.qm, p.dt, x0) for p in prepared]
            return F, G, x0, Xs

        def vp_residual(q):
            with np.errstate(all="ignore"):
                F, G, x0, Xs = states(q)
                if not all(np.isfinite(X).all() and np.isfinite(Xt).all() for X, Xt in Xs):
                    return np.full(n_res, 1e6)
                try:
                    Hu, Ht = _solve_outputs([X for X, _ in Xs], [Xt for _, Xt in Xs],
                                            prepared, every)
                except np.linalg.LinAlgError:
                    return np.full(n_res, 1e6)
                res = _residuals(F, G, Hu, Ht, x0, prepared, every)
            return res if np.isfinite(res).all() else np.full(n_res, 1e6)

        fit = least_squares(vp_residual, q0, max_nfev=polish_evals, x_scale="jac")
        F_p, G_p, x0_p, Xs = states(fit.x)
        Hu_p, Ht_p = _solve_outputs([X for X, _ in Xs], [Xt for _, Xt in Xs], prepared, every)
        cand = np.concatenate([np.log(-F_p), G_p.ravel(), Hu_p.ravel(), Ht_p.ravel()]
                              + ([x0_p] if fit_x0 else []))
        cand_val = objective(cand)
        if cand_val < best_val:
            best, best_val, polished = cand, cand_val, True

    if not np.isfinite(best_val):
        raise LearningError("learning produced no finite candidate")
    F, G, Hu, Ht, x0 = unpack(best)
    order_idx = np.argsort(F)[::-1]
    record = {
        "diffusivities": learning.diffusivities,
        "j_rom": float(best_val),
        "j_rom_init": float(j_init),
        "swarm_best": float(swarm.value),
        "seed": cfg.seed,
        "particles": cfg.particles,
        "iterations": cfg.iterations,
        "inertia": cfg.inertia,
        "cognitive": cfg.cognitive,
        "social": cfg.social,
        "bound_scale": cfg.bound_scale,
        "floor": floor,
        "floor_scope": floor_scope,
        "polished": polished,
        "T_ref": learning.T_ref,
    }
    return ReducedSystem(
        F=F[order_idx], G=G[order_idx], H_u=Hu[:, order_idx], H_t=Ht[:, order_idx],
        positions=system.positions, length=system.length, t_ref=learning.t_ref,
        x0=x0[order_idx] * learning.T_ref, record=record,
    )


def rom_errors(reduced, cases, dt, T_ref=None, every=1):
    """Worst ``(eps2_u, epsinf_u, eps2_t, epsinf_t)`` of the ROM over LOM cases."""
    e2u = eiu = e2t = eit = 0.0
    for c in cases:
        sol = integrate_rom(reduced, c.fo, c.forcing, dt, t_end=float(c.reference.t[-1]),
                            every=every, T_ref=T_ref)
        du = sol.yu - c.reference.yu
        dth = sol.ytheta - c.reference.ytheta
        e2u = max(e2u, float(np.sqrt(np.mean(du**2))))
        eiu = max(eiu, float(np.abs(du).max()))
        e2t = max(e2t, float(np.sqrt(np.mean(dth**2))))
        eit = max(eit, float(np.abs(dth).max()))
    return e2u, eiu, e2t, eit


def order_sweep(learning, orders, cfg=None, evaluation=None, **learn_kwargs):
    """Train one ROM per order and tabulate its errors.

    Each row is ``(order, eps2_u, epsinf_u, eps2_theta, epsinf_theta, J_rom)``
    measured on ``evaluation`` cases (the learning cases by default).
    """
    cases = learning.cases if evaluation is None else evaluation
    rows = []
    for order in orders:
        rom = learn(learning, order, cfg, **learn_kwargs)
        e = rom_errors(rom, cases, learning.dt, T_ref=learning.T_ref, every=learning.every)
        rows.append((order,) + e + (rom.record["j_rom"],))
    return rows
