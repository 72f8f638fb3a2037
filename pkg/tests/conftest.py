import numpy as np
import pytest

from onebitdet.detector import detector_coeffs
from onebitdet.model import default_params


@pytest.fixture(scope="session")
def params():
    """Standard setting: corr 0.7 at -5 dB."""
    return default_params()


@pytest.fixture(scope="session")
def coeffs(params):
    return detector_coeffs(params)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record():
    """Record one acceptance verdict; the lines are echoed at the end of the run."""
    def _record(number: int, title: str, passed: bool, detail: str = "") -> bool:
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {title}"
        if detail:
            line += f" [{detail}]"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
