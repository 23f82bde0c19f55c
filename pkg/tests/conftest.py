import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from swrom.grid import build_diff_ops, make_grid
from swrom.model import FullOrderModel, PhysParams

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.function_scoped_fixture]
)
settings.load_profile("default")

ACCEPTANCE = {}


def record(criterion, ok, detail):
    """Store the outcome of an acceptance criterion for the terminal summary."""
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])


def random_state(rng, N, amp=0.3):
    ut = amp * rng.standard_normal(N)
    vt = amp * rng.standard_normal(N)
    h = 1.0 + 0.2 * rng.random(N)
    return np.concatenate([ut, vt, h])


@pytest.fixture
def params():
    return PhysParams.from_latitude(math.pi / 4)


@pytest.fixture
def small_model(params):
    grid = make_grid(0.0, 1.0, 0.0, 1.2, 5, 6)
    return FullOrderModel(grid, build_diff_ops(grid), params)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
