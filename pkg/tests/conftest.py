import numpy as np
import pytest

from spinwehrl import default_rule


@pytest.fixture(scope="session")
def rule():
    return default_rule(64, 128)


@pytest.fixture(scope="session")
def fine_rule():
    return default_rule(128, 256)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)



ACCEPTANCE_LOG = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash.setdefault(ACCEPTANCE_LOG, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LOG, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
