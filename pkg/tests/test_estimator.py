import numpy as np
import pytest
from hypothesis import given, strategies as st

from walldiff.errors import AlignmentError, DomainError, IdentifiabilityError
from walldiff.estimator import (
    CONVERGED,
    EstimationConfig,
    LomForward,
    cost,
    estimate,
    gauss_step,
    stability_scan,
    trapezoid_weights,
)
from walldiff.model import (
    BoundaryForcing,
    DimensionlessScaling,
    InitialProfile,
    SensorLayout,
    WallProblem,
    assemble_lom,
    nondimensionalize,
)
from walldiff.scenarios import SMALL_SENSORS, VALIDATION_ALPHA, cosine_12h


def test_cost_zero_and_constant_offset():
    u = np.random.default_rng(0).normal(size=(11, 3))
    assert cost(u, u, 0.5) == 0.0
    # three sensors, offset d over a 5-unit horizon
    assert cost(u + 0.2, u, 0.5) == pytest.approx(3 * 0.04 * 5.0, rel=1e-13)


def test_cost_shape_mismatch():
    with pytest.raises(AlignmentError):
        cost(np.zeros((3, 2)), np.zeros((3, 3)), 1.0)


@given(st.permutations(range(4)))
def test_cost_invariant_under_sensor_reordering(perm):
    rng = np.random.default_rng(1)
    u, m = rng.normal(size=(9, 4)), rng.normal(size=(9, 4))
    assert cost(u[:, perm], m[:, perm], 0.3) == pytest.approx(cost(u, m, 0.3), rel=1e-14)


def test_trapezoid_weights_sum_to_horizon():
    assert trapezoid_weights(7, 0.5).sum() == pytest.approx(3.0)


class Linear:
    """u(p) = a + b p with exact sensitivity b."""

    def __init__(self, a, b):
        self.a, self.b = a, b

    def __call__(self, p):
        return self.a + self.b * p, self.b


def test_linear_model_solved_in_one_step():
    rng = np.random.default_rng(2)
    a, b = rng.normal(size=(30, 3)), rng.normal(size=(30, 3)) * 1e6
    truth = 4.2e-7
    p = gauss_step(1e-7, a + b * 1e-7, b, a + b * truth, 0.1)
    assert p == pytest.approx(truth, rel=1e-12)


def test_step_is_clamped_to_bounds():
    b = np.ones((5, 1)) * 1e6
    assert gauss_step(1e-7, np.zeros((5, 1)), b, np.full((5, 1), 100.0), 1.0, (1e-8, 1e-5)) == 1e-5


def test_vanishing_sensitivity_not_identifiable():
    with pytest.raises(IdentifiabilityError):
        gauss_step(1e-7, np.zeros((5, 2)), np.zeros((5, 2)), np.ones((5, 2)), 1.0)


def test_noise_free_data_at_prior_is_fixed_point():
    rng = np.random.default_rng(3)
    fwd = Linear(rng.normal(size=(20, 2)), rng.normal(size=(20, 2)) * 1e6)
    p_apr = 3e-7
    data = fwd(p_apr)[0]
    p, tr = estimate(EstimationConfig(p_apr), data, 0.5, fwd)
    assert p == p_apr and tr.iterations == 1 and tr.status == CONVERGED
    assert tr.gamma1 == [0.0] and tr.gamma2 == [0.0]


def test_linear_estimate_trace():
    rng = np.random.default_rng(4)
    fwd = Linear(rng.normal(size=(20, 2)), rng.normal(size=(20, 2)) * 1e6)
    data = fwd(4e-7)[0] + 0.01 * rng.normal(size=(20, 2))
    p, tr = estimate(EstimationConfig(1e-7), data, 0.5, fwd)
    assert tr.status == CONVERGED and tr.iterations == 2
    assert tr.J[1] <= tr.J[0]
    rows = tr.rows()
    assert rows[0][0] == 0 and np.isnan(rows[0][3]) and rows[-1][1] == p


def test_config_invariants():
    with pytest.raises(DomainError):
        EstimationConfig(p_apr=1e-3)
    with pytest.raises(DomainError):
        EstimationConfig(p_apr=1e-7, bounds=(1e-6, 1e-7))
    with pytest.raises(DomainError):
        EstimationConfig(p_apr=1e-7, eta1=0)


def forward_for(alpha_data, n_nodes=30, dt_s=60.0, data_dt_s=None, hours=24.0):
    """Small wall, 12 h cosine forcing; returns (forward, hourly data, sample dt*)."""
    t = np.arange(0.0, hours * 3600 + 1, 3600.0)
    problem = WallProblem(0.5, 1.0, 1 / VALIDATION_ALPHA, t, cosine_12h(t),
                          np.full_like(t, 20.0), InitialProfile.uniform(20.0))
    scaling = DimensionlessScaling(40.0, 0.0)
    system = assemble_lom(problem, SensorLayout(SMALL_SENSORS), n_nodes)
    forcing = BoundaryForcing.from_problem(problem, scaling)
    init = nondimensionalize(np.full(n_nodes, 20.0), scaling)

    def make(step):
        return LomForward(system, forcing, init, step / 3600.0, hours,
                          int(round(3600.0 / step)), scaling)

    data = make(data_dt_s or dt_s)(alpha_data)[0]
    return make(dt_s), data, 1.0


def test_noise_free_round_trip_with_lom():
    fwd, data, dt = forward_for(VALIDATION_ALPHA)
    p, tr = estimate(EstimationConfig(2.8e-7), data, dt, fwd)
    assert abs(p / VALIDATION_ALPHA - 1) < 1e-3
    assert tr.status == CONVERGED and tr.iterations <= 20
    assert all(b <= a for a, b in zip(tr.J, tr.J[1:]))


def test_time_step_refinement_changes_estimate_little():
    fwd, data, dt = forward_for(VALIDATION_ALPHA, dt_s=60.0, data_dt_s=15.0)
    p, _ = estimate(EstimationConfig(2.8e-7), data, dt, fwd)
    assert abs(p / VALIDATION_ALPHA - 1) < 1e-2


def test_stability_scan_converges_from_every_guess():
    fwd, data, dt = forward_for(VALIDATION_ALPHA)
    rows = stability_scan(EstimationConfig(2.8e-7), data, dt, fwd, [1e-7, 3e-7, 9e-7])
    assert [r[0] for r in rows] == [1e-7, 3e-7, 9e-7]
    for _, p, it in rows:
        assert abs(p / VALIDATION_ALPHA - 1) < 1e-3 and it <= 20


@pytest.mark.slow
def test_noise_spread_matches_linearized_variance():
    """Estimates under white noise scatter like the Gauss-Markov prediction."""
    fwd, clean, dt = forward_for(VALIDATION_ALPHA, n_nodes=20, dt_s=120.0)
    sigma = np.array([0.94, 0.70, 0.46, 0.30, 0.13]) / 40.0
    _, sens = fwd(VALIDATION_ALPHA)
    w = trapezoid_weights(clean.shape[0], dt)[:, None]
    predicted = np.sqrt(np.sum((w * sens) ** 2 * sigma**2)) / np.sum(w * sens**2)
    rng = np.random.default_rng(11)
    est = []
    for _ in range(150):
        data = clean + rng.normal(size=clean.shape) * sigma
        est.append(estimate(EstimationConfig(VALIDATION_ALPHA), data, dt, fwd)[0])
    spread = np.std(est, ddof=1)
    assert spread == pytest.approx(predicted, rel=0.2)
    assert abs(np.mean(est) - VALIDATION_ALPHA) < 4 * predicted / np.sqrt(150)
