import numpy as np
import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def nprng():
    return np.random.default_rng(20240611)


@pytest.fixture
def criterion_line():
    """Record one pass/fail line per acceptance criterion for the run summary."""

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
