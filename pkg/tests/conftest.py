import numpy as np
import pytest

from dlfilter.grid import Grid, TimeAxis

BASE_OBS_TIMES = [0.05 * m for m in range(1, 10)]


@pytest.fixture
def grid():
    return Grid(K=100, L=1.0)


@pytest.fixture
def small_grid():
    return Grid(K=4, L=1.0)


@pytest.fixture
def time_axis():
    return TimeAxis.from_times(0.5, 0.005, BASE_OBS_TIMES)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[number])
