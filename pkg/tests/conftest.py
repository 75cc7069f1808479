import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nvmirror import materials as mat  # noqa: E402


@pytest.fixture(scope="session")
def silver():
    return mat.silver()


@pytest.fixture(scope="session")
def diamond():
    return mat.diamond()


@pytest.fixture(scope="session")
def air():
    return mat.air()


ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record ``(number, passed, detail)`` for the summary block."""

    def record(number, title, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} | {detail}"
        ACCEPTANCE[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
    missing = [n for n in range(1, 11) if n not in ACCEPTANCE]
    if missing and len(ACCEPTANCE) < 10:
        terminalreporter.write_line(f"not run: {missing}")
