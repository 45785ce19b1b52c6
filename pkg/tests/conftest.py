import numpy as np
import pytest

from walldiff.model import (
    BoundaryForcing,
    DimensionlessScaling,
    InitialProfile,
    SensorLayout,
    WallProblem,
    assemble_lom,
    nondimensionalize,
)
from walldiff.scenarios import SMALL_SENSORS, sine_24h

DT_S = 30.0


def small_problem(signal=sine_24h, hours=24.0, alpha=5.21e-7, right=20.0, init=20.0):
    t = np.arange(int(round(hours * 3600 / DT_S)) + 1) * DT_S
    return WallProblem(0.5, 1.0, 1.0 / alpha, t, signal(t), np.full_like(t, right),
                       InitialProfile.uniform(init))


@pytest.fixture(scope="session")
def daily_case():
    """Small wall under the daily sine in the T_ref = 10 frame of that signal."""
    problem = small_problem()
    scaling = DimensionlessScaling.from_series(problem.T_left, problem.T_right)
    layout = SensorLayout(SMALL_SENSORS)
    system = assemble_lom(problem, layout, 75)
    forcing = BoundaryForcing.from_problem(problem, scaling)
    init = nondimensionalize(np.full(75, 20.0), scaling)
    return dict(problem=problem, scaling=scaling, layout=layout, system=system,
                forcing=forcing, init=init, dt=DT_S / scaling.t_ref,
                fo=scaling.fourier(5.21e-7, 0.5))


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion, then assert it."""

    def check(number, title, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2} {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
