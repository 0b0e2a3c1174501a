import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from coopisac.ofdm import OfdmConfig
from coopisac.scenes import benchmark_ue_position

settings.register_profile("ci", derandomize=True, deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")

# Filled by tests/test_acceptance.py, echoed after the run.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def cfg():
    return OfdmConfig()


@pytest.fixture(scope="session")
def ue():
    return np.array(benchmark_ue_position())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
