import pytest

from coldwall.distributions import shellcap
from coldwall.geometry import ProblemParams
from coldwall.jintegrals import JNormalization

_LINES = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def params():
    return ProblemParams(1.0, 2.0)


@pytest.fixture(scope="session")
def fplus(params):
    return shellcap(params)


@pytest.fixture(scope="session")
def norm():
    return JNormalization.measure()


@pytest.fixture(scope="session")
def criterion_report(request):
    """Record one pass/fail line per acceptance criterion for the terminal summary."""
    lines = request.config.stash.setdefault(_LINES, [])

    def record(number: int, title: str, passed: bool, detail: str = ""):
        line = f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title}" + (f": {detail}" if detail else "")
        lines.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
