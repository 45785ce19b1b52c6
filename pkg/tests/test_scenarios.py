import numpy as np
import pytest

from walldiff.config import load_config
from walldiff.errors import DomainError
from walldiff.scenarios import (
    SCENARIOS,
    STANDIN_L1,
    STANDIN_T0,
    STANDIN_WALL,
    boundary_series,
    cosine_12h,
    initial_profile,
    sine_24h,
    sine_8h,
    synth_experiment,
)
from walldiff.workflow import run_estimate


def test_signals():
    t = np.array([0.0, 6 * 3600, 12 * 3600])
    assert np.allclose(sine_24h(t), [20, 25, 20])
    assert np.allclose(sine_8h(np.array([0.0, 2 * 3600])), [20, 40])
    assert np.allclose(cosine_12h(t), [20, 26, 20])


def test_unknown_scenario():
    with pytest.raises(DomainError, match="winter"):
        synth_experiment("winter", 0)


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_boundaries_start_on_the_initial_profile(name):
    t, left, right = boundary_series(name, np.random.default_rng(0))
    sc = SCENARIOS[name]
    prof = initial_profile(name)
    assert t[0] == 0 and t[-1] == pytest.approx(sc.hours * 3600)
    assert left[0] == pytest.approx(prof(0.0)) and right[0] == pytest.approx(prof(sc.length))


def test_standin_profile_and_seeded_forcing():
    prof = initial_profile("real-stand-in")
    assert prof(0.0) == STANDIN_T0
    assert prof(STANDIN_WALL) == pytest.approx(STANDIN_T0 * (1 + STANDIN_WALL / STANDIN_L1))
    a = boundary_series("real-stand-in", np.random.default_rng(1))
    b = boundary_series("real-stand-in", np.random.default_rng(2))
    assert a[0].size == 2671 and not np.array_equal(a[2], b[2])


def test_dataset_shape_and_metadata():
    ds = synth_experiment("validation-12h", 3)
    assert ds.times_h.size == 25 and ds.n_sensors == 5 and ds.step_h == 1.0
    assert ds.meta["alpha_true"] == 5.21e-7 and ds.meta["seed"] == 3
    clean = synth_experiment("validation-12h", 3, noise=False)
    assert not np.array_equal(ds.sensors, clean.sensors)
    assert np.array_equal(ds.T_left, clean.T_left)


def test_noise_free_validation_data_round_trip(tmp_path):
    ds = synth_experiment("validation-12h", 0, noise=False)
    cfg = load_config(None, [("estimate", "model", "lom"), ("problem", "T_ref", "40"),
                             ("problem", "T_min", "0")])
    summary = run_estimate(cfg, ds, tmp_path)
    assert abs(summary["eps_r"]["lom"]) < 1e-3
