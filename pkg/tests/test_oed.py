import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import trapezoid

from walldiff.errors import DomainError
from walldiff.model import (
    BoundaryForcing,
    DimensionlessScaling,
    InitialProfile,
    SensorLayout,
    WallProblem,
    assemble_lom,
    integrate_lom,
)
from walldiff.oed import (
    UncertaintyModel,
    criterion_vs_length,
    fisher,
    rank_windows,
    scan_windows,
    search_window,
    sensitivity_run,
    sensor_uncertainty,
)

arrays = st.integers(2, 30).flatmap(
    lambda n: st.lists(st.floats(-10, 10), min_size=3 * n, max_size=3 * n).map(
        lambda v: np.reshape(v, (n, 3))))


@given(arrays, st.floats(0.01, 5))
def test_fisher_non_negative_and_matches_trapezoid(theta, dt):
    sigma = np.array([0.5, 1.0, 2.0])
    psi = fisher(theta, sigma, dt)
    assert psi >= 0
    ref = sum(trapezoid(theta[:, s] ** 2, dx=dt) / sigma[s] ** 2 for s in range(3))
    assert psi == pytest.approx(ref, rel=1e-12, abs=1e-300)


@given(arrays)
def test_halving_sigma_quadruples_criterion(theta):
    sigma = np.array([0.3, 0.7, 1.1])
    a, b = fisher(theta, sigma, 0.25), fisher(theta, sigma / 2, 0.25)
    assert b == pytest.approx(4 * a, rel=1e-12, abs=1e-300)


@settings(max_examples=30)
@given(arrays, st.integers(1, 28))
def test_additive_over_adjacent_windows(theta, cut):
    n = theta.shape[0]
    if n < 3:
        return
    k = 1 + cut % (n - 2)
    sigma = np.ones(3)
    whole = fisher(theta, sigma, 0.5)
    parts = fisher(theta[:k + 1], sigma, 0.5) + fisher(theta[k:], sigma, 0.5)
    assert whole == pytest.approx(parts, rel=1e-12, abs=1e-12)


def test_fisher_rejects_bad_input():
    with pytest.raises(DomainError):
        fisher(np.ones((1, 2)), [1, 1], 1.0)
    with pytest.raises(DomainError):
        fisher(np.ones((3, 2)), [1, 0], 1.0)


def test_constant_sensitivity_ties_resolve_to_earliest_start():
    theta = np.ones((50, 2))
    starts, values = scan_windows(theta, np.ones(2), 1.0, 10, 3)
    assert np.all(values == values[0])
    assert starts[rank_windows(starts, values)[0]] == 0


def test_scan_windows_stride_grid_and_fit():
    theta = np.arange(21.0)[:, None]
    starts, _ = scan_windows(theta, [1.0], 1.0, 5, 4)
    assert list(starts) == [0, 4, 8, 12]
    with pytest.raises(DomainError):
        scan_windows(theta, [1.0], 1.0, 21)


@pytest.fixture(scope="module")
def run():
    """Ten days on the small wall with a daily plus a slower forcing."""
    t = np.arange(0.0, 240 * 3600 + 1, 300.0)
    left = 20 + 5 * np.sin(2 * np.pi * t / 86400) + 3 * np.sin(2 * np.pi * t / (5 * 86400))
    problem = WallProblem(0.5, 1.0, 1 / 5.21e-7, t, left, np.full_like(t, 20.0),
                          InitialProfile.uniform(20.0))
    scaling = DimensionlessScaling(40.0, 0.0)
    return sensitivity_run(problem, SensorLayout((0.1, 0.25, 0.45)), scaling, 5.21e-7, 20,
                           300.0, 3600.0, UncertaintyModel(0.1, 0.02))


def test_search_window_agrees_with_brute_force(run):
    plans = search_window(run, 2.0, stride_hours=2.0)
    theta = run.solution.ytheta
    sigma = run.sigma / 40.0
    brute = []
    for i in range(0, theta.shape[0] - 48, 2):
        seg = theta[i:i + 49]
        brute.append((i, sum(trapezoid(seg[:, s] ** 2, dx=1.0) / sigma[s] ** 2 for s in range(3))))
    brute.sort(key=lambda r: (-r[1], r[0]))
    assert [p.t_ini for p in plans] == [i / 24.0 for i, _ in brute]
    assert [p.psi_raw for p in plans] == pytest.approx([v for _, v in brute], rel=1e-12)
    assert plans[0].psi == 1.0 and all(0 <= p.psi <= 1 for p in plans)


def test_best_criterion_grows_with_window_length(run):
    rows = criterion_vs_length(run, [1, 2, 3, 5, 7], stride_hours=1.0, cost_per_hour=0.5)
    psi = [r[1] for r in rows]
    assert all(b >= a for a, b in zip(psi, psi[1:]))
    assert [r[2] for r in rows] == [12.0, 24.0, 36.0, 60.0, 84.0]


def test_window_longer_than_sequence_rejected(run):
    with pytest.raises(DomainError):
        search_window(run, 11.0)
    with pytest.raises(DomainError):
        search_window(run, 1.0, stride_hours=0.5)


def test_uncertainty_reduces_to_noise_without_position_error(run):
    sig = sensor_uncertainty(run.solution, run.system, run.scaling, UncertaintyModel(0.2, 0.0))
    assert np.allclose(sig, 0.2, rtol=0, atol=1e-15)
    assert np.all(run.sigma >= 0.1)


def test_uncertainty_from_linear_steady_gradient():
    """A steady linear field has dT/dx = dT/L everywhere."""
    system = assemble_lom(0.5, SensorLayout((0.1, 0.3)), 30)
    forcing = BoundaryForcing(np.array([0.0, 10.0]), np.array([[0.75, 0.25], [0.75, 0.25]]))
    init = system.steady_profile(forcing.at(0.0))
    sol = integrate_lom(system, 0.01, forcing, init, 0.05, keep_field=True)
    scaling = DimensionlessScaling(40.0, 0.0)
    grad = 0.5 * 40.0 / 0.5
    sig = sensor_uncertainty(sol, system, scaling, UncertaintyModel(0.1, 0.02))
    assert np.allclose(sig, np.hypot(0.1, grad * 0.02), rtol=1e-10)


def test_uncertainty_model_invariants():
    with pytest.raises(DomainError):
        UncertaintyModel(0.0, 0.02)
    with pytest.raises(DomainError):
        UncertaintyModel(0.1, -0.01)
