import numpy as np
import pytest

from hillsim.cw import OrbitalContext, nmt_initial_conditions, propagate_continuous
from hillsim.scaling import lab_pipeline

N_EARTH = 0.001027


@pytest.fixture
def ctx():
    return OrbitalContext(N_EARTH, 1.0)


@pytest.fixture
def nmt_ic(ctx):
    return np.array(nmt_initial_conditions(800.0, 0.16, 0.0, 0.0, ctx))


def nmt_waypoints(z0=0.0, vz0=0.0, periods=3, duration=10.0, rate=48.0, samples=3001):
    ctx = OrbitalContext(N_EARTH, 1.0)
    ic = nmt_initial_conditions(800.0, 0.16, z0, vz0, ctx)
    span = periods * ctx.period
    traj = propagate_continuous(ic, None, ctx, (0.0, span), t_eval=np.linspace(0, span, samples))
    return lab_pipeline(traj, duration, rate)


@pytest.fixture(scope="session")
def in_plane_waypoints():
    return nmt_waypoints()


@pytest.fixture(scope="session")
def out_of_plane_waypoints():
    return nmt_waypoints(z0=1.0, vz0=1.0)


# acceptance reporting: each criterion records one line, echoed at the end of the run

_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    def record(number, title, passed, detail=""):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
        _ACCEPTANCE_LINES.append((number, line))
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
