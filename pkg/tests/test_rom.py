import numpy as np
import pytest

from walldiff.errors import AlignmentError, DomainError, OrderError
from walldiff.model import BoundaryForcing, SensorLayout, assemble_lom, integrate_lom
from walldiff.rom import (
    LearningSet,
    ReducedSystem,
    TrainingCase,
    init_from_modal,
    integrate_rom,
    j_rom,
    learn,
    order_sweep,
    rom_errors,
)
from walldiff.scenarios import EXPERIMENT_SCALING, SMALL_SENSORS, learning_set, sweep_cases
from walldiff.swarm import SwarmConfig

N_SMALL = 20
DT = 0.1


@pytest.fixture(scope="module")
def small():
    """Coarse small-wall LOM with a cheap two-diffusivity learning set."""
    system = assemble_lom(0.5, SensorLayout(SMALL_SENSORS), N_SMALL)
    t = np.linspace(0.0, 24.0, 25)
    left = 0.5 + 0.125 * np.sin(2 * np.pi * t / 24.0)
    forcing = BoundaryForcing(t, np.column_stack([left, np.full_like(left, 0.5)]))
    init = np.full(N_SMALL, 0.5)
    fo = [EXPERIMENT_SCALING.fourier(a, 0.5) for a in (2e-7, 5e-7)]
    entries = [(a, forcing, init, "sine") for a in (2e-7, 5e-7)]
    ls = LearningSet.build(system, entries, EXPERIMENT_SCALING, DT)
    return dict(system=system, forcing=forcing, init=init, fo=fo, learning=ls)


def naive_rom(rom, fo, forcing, dt, n, x0):
    """Midpoint rule on the stacked reduced system, one step at a time."""
    q0 = forcing.at(0.0)
    X = np.array(x0, dtype=float)
    Xt = np.zeros_like(X)
    yu, yt = [rom.H_u @ X], [rom.H_t @ Xt]

    def rhs(X, Xt, q):
        g = rom.G @ (q - q0)
        return fo * (rom.F * X + g), fo * rom.F * Xt + rom.F * X + g

    for k in range(n):
        a, b = rhs(X, Xt, forcing.at(k * dt))
        Xm, Xtm = X + 0.5 * dt * a, Xt + 0.5 * dt * b
        a, b = rhs(Xm, Xtm, forcing.at((k + 0.5) * dt))
        X, Xt = X + dt * a, Xt + dt * b
        yu.append(rom.H_u @ X)
        yt.append(rom.H_t @ Xt)
    return np.array(yu) + rom.sensor_steady(q0), np.array(yt)


def test_recurrence_equals_stepwise_midpoint(small):
    rng = np.random.default_rng(0)
    r = 4
    rom = ReducedSystem(F=-rng.uniform(1, 50, r), G=rng.normal(size=(r, 2)),
                        H_u=rng.normal(size=(5, r)), H_t=rng.normal(size=(5, r)),
                        positions=SMALL_SENSORS, length=0.5, t_ref=3600.0)
    x0 = rng.normal(size=r)
    sol = integrate_rom(rom, small["fo"][0], small["forcing"], DT, x0=x0)
    yu, yt = naive_rom(rom, small["fo"][0], small["forcing"], DT, 240, x0)
    assert np.allclose(sol.yu, yu, rtol=1e-11, atol=1e-12)
    assert np.allclose(sol.ytheta, yt, rtol=1e-11, atol=1e-12)


def test_modal_eigenvalues_sorted_descending(small):
    rom = init_from_modal(small["system"], 6)
    assert np.all(np.diff(rom.F) < 0)
    assert np.all(rom.F < 0)
    assert np.allclose(rom.H_t, rom.H_u)


def test_full_modal_basis_reproduces_lom(small):
    rom = init_from_modal(small["system"], N_SMALL)
    for fo in small["fo"]:
        ref = integrate_lom(small["system"], fo, small["forcing"], small["init"], DT)
        sol = integrate_rom(rom, fo, small["forcing"], DT)
        assert np.abs(sol.yu - ref.yu).max() < 1e-10
        assert np.abs(sol.ytheta - ref.ytheta).max() < 1e-10


def test_full_modal_basis_with_initial_deviation(small):
    system = small["system"]
    init = 0.5 + 0.2 * np.sin(np.pi * system.nodes)
    rom = init_from_modal(system, N_SMALL)
    x0 = rom.record["basis"].T @ (init - system.steady_profile(small["forcing"].at(0.0)))
    ref = integrate_lom(system, small["fo"][1], small["forcing"], init, DT)
    sol = integrate_rom(rom, small["fo"][1], small["forcing"], DT, x0=x0)
    assert np.abs(sol.yu - ref.yu).max() < 1e-10
    assert np.abs(sol.ytheta - ref.ytheta).max() < 1e-10


def test_single_mode_reaches_lom_steady_state(small):
    system = small["system"]
    forcing = BoundaryForcing(np.array([0.0, 400.0]), np.array([[1.0, 0.2], [1.0, 0.2]]))
    init = np.zeros(N_SMALL)
    fo = small["fo"][1]
    ref = integrate_lom(system, fo, forcing, init, DT, every=4000)
    rom = init_from_modal(system, 1)
    x0 = rom.record["basis"].T @ (init - system.steady_profile(forcing.at(0.0)))
    sol = integrate_rom(rom, fo, forcing, DT, x0=x0, every=4000)
    assert np.abs(sol.yu[-1] - ref.yu[-1]).max() < 1e-6


def test_order_bounds(small):
    with pytest.raises(OrderError):
        init_from_modal(small["system"], N_SMALL + 1)
    with pytest.raises(OrderError):
        init_from_modal(small["system"], 0)


def test_reduced_system_requires_negative_rates():
    with pytest.raises(DomainError):
        ReducedSystem(F=[-1.0, 0.0], G=np.zeros((2, 2)), H_u=np.zeros((1, 2)),
                      H_t=np.zeros((1, 2)), positions=(0.1,), length=0.5, t_ref=3600.0)


def test_rest_state_gives_zero_output(small):
    rom = init_from_modal(small["system"], 5)
    forcing = BoundaryForcing(np.array([0.0, 10.0]), np.zeros((2, 2)))
    sol = integrate_rom(rom, small["fo"][0], forcing, DT)
    assert np.all(sol.yu == 0) and np.all(sol.ytheta == 0)


def test_output_is_affine_in_temperature_scale(small):
    rom = init_from_modal(small["system"], 5)
    f = small["forcing"]
    a, b = 2.5, -0.7
    scaled = BoundaryForcing(f.times, a * f.values + b)
    base = integrate_rom(rom, small["fo"][0], f, DT)
    other = integrate_rom(rom, small["fo"][0], scaled, DT)
    assert np.allclose(other.yu, a * base.yu + b, atol=1e-12)
    assert np.allclose(other.ytheta, a * base.ytheta, atol=1e-12)


def test_j_rom_zero_for_full_basis(small):
    rom = init_from_modal(small["system"], N_SMALL)
    assert j_rom(rom, small["learning"]) < 1e-16


def test_j_rom_grows_when_output_doubled(small):
    rom = init_from_modal(small["system"], 5)
    doubled = ReducedSystem(rom.F, rom.G, 2 * rom.H_u, rom.H_t, rom.positions, rom.length, 3600.0)
    ls = small["learning"]
    assert j_rom(doubled, ls) > j_rom(rom, ls)
    assert j_rom(doubled, ls, floor=1e-2, floor_scope="local") > j_rom(rom, ls, floor=1e-2,
                                                                        floor_scope="local")


def test_j_rom_sensor_mismatch(small):
    rom = ReducedSystem([-1.0], np.zeros((1, 2)), np.zeros((2, 1)), np.zeros((2, 1)),
                        (0.1, 0.2), 0.5, 3600.0)
    with pytest.raises(AlignmentError):
        j_rom(rom, small["learning"])


def test_learning_set_needs_common_grid(small):
    c = small["learning"].cases[0]
    short = integrate_lom(small["system"], c.fo, c.forcing, c.init, DT, t_end=12.0)
    with pytest.raises(AlignmentError):
        LearningSet(small["system"],
                    [c, TrainingCase(c.alpha, c.fo, c.forcing, c.init, short)], DT, 40.0, 3600.0)


def test_learn_requires_two_diffusivities(small):
    ls = small["learning"]
    one = LearningSet(ls.system, ls.cases[:1], ls.dt, ls.T_ref, ls.t_ref)
    with pytest.raises(DomainError):
        learn(one, 3, SwarmConfig(particles=2, iterations=1))


def test_single_case_full_order_never_worse_than_init(small):
    ls = small["learning"]
    one = LearningSet(ls.system, ls.cases[:1], ls.dt, ls.T_ref, ls.t_ref)
    rom = learn(one, N_SMALL, SwarmConfig(particles=4, iterations=3), polish=False,
                min_diffusivities=1)
    assert rom.record["j_rom"] <= rom.record["j_rom_init"]


@pytest.fixture(scope="module")
def trained(small):
    return learn(small["learning"], 3, SwarmConfig(particles=8, iterations=5, seed=7))


def test_learned_rom_is_stable_and_improves(trained, small):
    assert np.all(trained.F < 0)
    assert trained.record["j_rom"] < trained.record["j_rom_init"]
    assert trained.record["j_rom"] == pytest.approx(j_rom(trained, small["learning"]), rel=1e-9)


def test_learn_is_deterministic(trained, small):
    again = learn(small["learning"], 3, SwarmConfig(particles=8, iterations=5, seed=7))
    for name in ("F", "G", "H_u", "H_t", "x0"):
        assert np.array_equal(getattr(trained, name), getattr(again, name))


def test_learned_rom_bounded_on_long_horizon(trained, small):
    t = np.linspace(0.0, 2400.0, 201)
    f = BoundaryForcing(t, np.column_stack([0.5 + 0.3 * np.sin(t), np.full_like(t, 0.4)]))
    sol = integrate_rom(trained, small["fo"][0], f, DT)
    assert np.all(np.isfinite(sol.yu)) and np.abs(sol.yu).max() < 10


def test_order_sweep_single_row_matches_standalone(small):
    cfg = SwarmConfig(particles=4, iterations=2, seed=3)
    rows = order_sweep(small["learning"], [2], cfg)
    assert len(rows) == 1
    rom = learn(small["learning"], 2, cfg)
    errs = rom_errors(rom, small["learning"].cases, DT, T_ref=40.0)
    assert rows[0][1:5] == pytest.approx(errs, rel=0, abs=0)
    assert rows[0][5] == rom.record["j_rom"]


def test_learned_initial_state_for_shared_deviation(small):
    """A common non-steady start is learned into x0 and then reproduced."""
    system = small["system"]
    init = 0.5 + 0.1 * np.sin(np.pi * system.nodes)
    entries = [(a, small["forcing"], init, "bump") for a in (2e-7, 5e-7)]
    ls = LearningSet.build(system, entries, EXPERIMENT_SCALING, DT)
    rom = learn(ls, 4, SwarmConfig(particles=4, iterations=2, seed=0))
    assert np.any(rom.x0 != 0)
    e2u, eiu, _, _ = rom_errors(rom, ls.cases, DT, T_ref=EXPERIMENT_SCALING.T_ref)
    assert eiu < 5e-3


def test_paper_scale_rom_tracks_lom_at_intermediate_diffusivity():
    """Quick order-5 training on the four-signal set, checked at alpha = 3e-7."""
    ls = learning_set()
    rom = learn(ls, 5, SwarmConfig(particles=6, iterations=3, seed=0), polish_evals=150)
    case = sweep_cases([3e-7])[0]
    sol = integrate_rom(rom, case.fo, case.forcing, ls.dt)
    per_sensor = np.sqrt(np.mean((sol.yu - case.reference.yu) ** 2, axis=0))
    assert np.all(per_sensor < 1e-1)
