import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("hofa", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("hofa")


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(1234))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
