import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_spd(rng, r, n=None, floor=0.1):
    """SPD draws A A^T / r + floor * e with Gaussian A."""
    shape = (r, r) if n is None else (n, r, r)
    a = rng.standard_normal(shape)
    return a @ np.swapaxes(a, -1, -2) / r + floor * np.eye(r)


@st.composite
def spd_matrices(draw, r=None, max_r=4):
    """SPD matrices with condition number bounded by construction."""
    if r is None:
        r = draw(st.integers(1, max_r))
    a = draw(hnp.arrays(float, (r, r), elements=st.floats(-3, 3, allow_nan=False)))
    floor = draw(st.floats(0.05, 2.0))
    return a @ a.T / r + floor * np.eye(r)


@st.composite
def spd_pairs(draw, max_r=4):
    r = draw(st.integers(1, max_r))
    return draw(spd_matrices(r=r)), draw(spd_matrices(r=r))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


#: one line per acceptance criterion, filled by test_acceptance and echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
