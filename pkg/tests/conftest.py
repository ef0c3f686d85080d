from fractions import Fraction

import pytest
from hypothesis import settings

from d2dcache.core import validate_profile

settings.register_profile("default", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("default")


def prof(*m, N=None):
    return validate_profile(len(m), N or len(m), list(m))


@pytest.fixture
def half():
    return Fraction(1, 2)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: list[str] = []


def record(n: int, ok: bool, what: str, elapsed: float) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {what} [{elapsed:.2f}s]"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
