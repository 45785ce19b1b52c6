"""Synthetic experiments with known ground truth.

``learning-24h`` and ``learning-8h`` are noise-free training signals on a
0.5 m wall; ``validation-12h`` is the noisy estimation test case on the same
wall; ``real-stand-in`` imitates a four-month monitoring campaign on a 0.43 m
wall with three embedded sensors.  Sensor data always come from the LOM fed
with the very boundary series written to the dataset (linear between
samples), so a model built from the file can reproduce the truth exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .io import Dataset
from .model import (
    BoundaryForcing,
    DimensionlessScaling,
    InitialProfile,
    SensorLayout,
    WallProblem,
    assemble_lom,
    integrate_lom,
    nondimensionalize,
    redimensionalize,
)
from .rom import LearningSet

SMALL_WALL = 0.5
SMALL_SENSORS = (0.1, 0.15, 0.25, 0.3, 0.45)
VALIDATION_NOISE = (0.94, 0.70, 0.46, 0.30, 0.13)
LEARNING_ALPHAS = (2.03e-7, 5.21e-7, 5.81e-7)
VALIDATION_ALPHA = 5.21e-7

STANDIN_WALL = 0.43
STANDIN_SENSORS = (0.05, 0.23, 0.40)
STANDIN_ALPHA = 1.06e-7
STANDIN_CONDUCTIVITY = 1.4
STANDIN_HOURS = 2670.0
STANDIN_T0 = 11.75
STANDIN_L1 = -0.406
STANDIN_SIGMA = 0.1
STANDIN_DELTA_X = 0.02


@dataclass(frozen=True)
class Scenario:
    name: str
    length: float
    positions: tuple[float, ...]
    alpha: float
    hours: float
    step_h: float
    noise: tuple[float, ...]
    conductivity: float = 1.0


SCENARIOS = {
    "learning-24h": Scenario("learning-24h", SMALL_WALL, SMALL_SENSORS, VALIDATION_ALPHA,
                             24.0, 30.0 / 3600.0, (0.0,) * 5),
    "learning-8h": Scenario("learning-8h", SMALL_WALL, SMALL_SENSORS, VALIDATION_ALPHA,
                            24.0, 30.0 / 3600.0, (0.0,) * 5),
    "validation-12h": Scenario("validation-12h", SMALL_WALL, SMALL_SENSORS, VALIDATION_ALPHA,
                               24.0, 1.0, VALIDATION_NOISE),
    "real-stand-in": Scenario("real-stand-in", STANDIN_WALL, STANDIN_SENSORS, STANDIN_ALPHA,
                              STANDIN_HOURS, 1.0, (STANDIN_SIGMA,) * 3, STANDIN_CONDUCTIVITY),
}


def sine_24h(t):
    return 20.0 + 5.0 * np.sin(2.0 * np.pi * t / 86400.0)


def sine_8h(t):
    return 20.0 + 20.0 * np.sin(6.0 * np.pi * t / 86400.0)


def cosine_12h(t):
    return 20.0 + 3.0 * (1.0 - np.cos(2.0 * np.pi * t / 43200.0))


def _standin_boundaries(t, rng):
    """Indoor-like left face and outdoor-like right face, both continuous at 0.

    The right face starts on the linear initial profile and carries a slow
    seasonal warming, a diurnal swing and a handful of multi-day (synoptic)
    oscillations with seeded periods, amplitudes and phases.
    """
    days = t / 86400.0
    t_right0 = STANDIN_T0 * (1.0 + STANDIN_WALL / STANDIN_L1)

    def synoptic(n, amp):
        periods = rng.uniform(3.0, 12.0, n)
        amps = amp * rng.uniform(0.5, 1.0, n)
        phases = rng.uniform(0.0, 2.0 * np.pi, n)
        out = np.zeros_like(days)
        for P, a, ph in zip(periods, amps, phases):
            out += a * (np.sin(2.0 * np.pi * days / P + ph) - np.sin(ph))
        return out

    right = (t_right0 + 8.0 * days / days[-1]
             + 3.0 * (1.0 - np.cos(2.0 * np.pi * days))
             + synoptic(6, 2.5))
    left = (STANDIN_T0 + 3.0 * days / days[-1]
            + 0.6 * (1.0 - np.cos(2.0 * np.pi * days))
            + synoptic(3, 0.5))
    return left, right


def boundary_series(scenario, rng):
    """Sample times (s) and face temperatures of a scenario."""
    sc = SCENARIOS[scenario]
    n = int(round(sc.hours / sc.step_h))
    t = np.arange(n + 1) * sc.step_h * 3600.0
    if scenario == "learning-24h":
        return t, sine_24h(t), np.full_like(t, 20.0)
    if scenario == "learning-8h":
        return t, sine_8h(t), np.full_like(t, 20.0)
    if scenario == "validation-12h":
        return t, cosine_12h(t), np.full_like(t, 20.0)
    return (t,) + _standin_boundaries(t, rng)


def initial_profile(scenario):
    if scenario == "real-stand-in":
        return InitialProfile.from_lengths(STANDIN_T0, STANDIN_L1)
    return InitialProfile.uniform(20.0)


def synth_experiment(scenario, seed, alpha=None, noise=True, n_nodes=75, dt_s=30.0):
    """Generate a scenario dataset.

    Parameters
    ----------
    scenario : str
        One of ``SCENARIOS``.
    seed : int
        Seeds the boundary randomness (stand-in only) and the sensor noise.
    alpha : float, optional
        Generating diffusivity, defaults to the scenario's.
    noise : bool
        Add the scenario's Gaussian sensor noise.
    n_nodes, dt_s
        LOM resolution used for the truth.
    """
    if scenario not in SCENARIOS:
        raise DomainError(f"unknown scenario {scenario!r}; choose from {sorted(SCENARIOS)}")
    sc = SCENARIOS[scenario]
    alpha = sc.alpha if alpha is None else float(alpha)
    rng = np.random.default_rng(seed)
    t, TL, TR = boundary_series(scenario, rng)
    init = initial_profile(scenario)
    problem = WallProblem(sc.length, sc.conductivity, sc.conductivity / alpha, t, TL, TR, init)
    scaling = DimensionlessScaling.from_series(TL, TR)
    layout = SensorLayout(sc.positions)
    system = assemble_lom(problem, layout, n_nodes)
    forcing = BoundaryForcing.from_problem(problem, scaling)
    u0 = nondimensionalize(init(system.nodes * sc.length), scaling)
    every = int(round(sc.step_h * 3600.0 / dt_s))
    sol = integrate_lom(system, scaling.fourier(alpha, sc.length), forcing, u0,
                        dt_s / scaling.t_ref, every=every)
    clean = redimensionalize(sol.yu, scaling)
    sigma = np.asarray(sc.noise, dtype=float)
    observed = clean + rng.normal(size=clean.shape) * sigma if noise else clean.copy()
    meta = {
        "scenario": scenario,
        "seed": int(seed),
        "alpha_true": alpha,
        "length": sc.length,
        "conductivity": sc.conductivity,
        "initial_coeffs": list(init.coeffs),
        "noise_std": list(sigma) if noise else [0.0] * len(sigma),
        "n_nodes": n_nodes,
        "dt_s": dt_s,
    }
    sigma_m = STANDIN_SIGMA if scenario == "real-stand-in" else None
    delta_x = STANDIN_DELTA_X if scenario == "real-stand-in" else None
    return Dataset(t / 3600.0, TL, TR, observed, sc.positions, sc.step_h, sigma_m, delta_x, meta)


# ---------------------------------------------------------------------------
# Small-wall experiment helpers
# ---------------------------------------------------------------------------

EXPERIMENT_SCALING = DimensionlessScaling(T_ref=40.0, T_min=0.0)


def small_wall_problem(signal, alpha=VALIDATION_ALPHA, hours=24.0, dt_s=30.0):
    """Small wall under an analytic left-face signal, sampled at the solver step."""
    t = np.arange(int(round(hours * 3600.0 / dt_s)) + 1) * dt_s
    return WallProblem(SMALL_WALL, 1.0, 1.0 / alpha, t, signal(t), np.full_like(t, 20.0),
                       InitialProfile.uniform(20.0))


def small_wall_system(n_nodes=75):
    return assemble_lom(SMALL_WALL, SensorLayout(SMALL_SENSORS), n_nodes)


def learning_set(scaling=EXPERIMENT_SCALING, n_nodes=75, dt_s=30.0):
    """Three diffusivities under the daily sine plus one under the 8 h sine."""
    system = small_wall_system(n_nodes)
    u0 = nondimensionalize(np.full(n_nodes, 20.0), scaling)
    f24 = BoundaryForcing.from_problem(small_wall_problem(sine_24h, dt_s=dt_s), scaling)
    f8 = BoundaryForcing.from_problem(small_wall_problem(sine_8h, dt_s=dt_s), scaling)
    entries = [(a, f24, u0, "24h") for a in LEARNING_ALPHAS]
    entries.append((VALIDATION_ALPHA, f8, u0, "8h"))
    return LearningSet.build(system, entries, scaling, dt_s / scaling.t_ref)


def sweep_cases(alphas, scaling=EXPERIMENT_SCALING, n_nodes=75, dt_s=30.0):
    """LOM references under the daily sine for each diffusivity."""
    system = small_wall_system(n_nodes)
    u0 = nondimensionalize(np.full(n_nodes, 20.0), scaling)
    f24 = BoundaryForcing.from_problem(small_wall_problem(sine_24h, dt_s=dt_s), scaling)
    return LearningSet.build(system, [(a, f24, u0, "sweep") for a in alphas], scaling,
                             dt_s / scaling.t_ref).cases
