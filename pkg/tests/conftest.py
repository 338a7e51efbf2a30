import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from featnet import kernels

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow,
                                                 HealthCheck.function_scoped_fixture])
settings.load_profile("default")


@pytest.fixture(params=kernels.available())
def backend(request):
    """Run the test once per available kernel backend."""
    with kernels.use_backend(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# One line per acceptance criterion, echoed in the terminal summary.
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def accept():
    def record(number: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
