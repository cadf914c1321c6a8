import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from peakshave.subproblem import LocalProblemData  # noqa: E402


@pytest.fixture
def triangle():
    """``{x in [0,1]^2 : x1 + x2 >= 1}`` with unit costs."""
    return LocalProblemData([1.0, 1.0], [[-1.0, -1.0]], [-1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def three_agent_instance():
    """Hand-built S=3 agents with energy needs 1.5, 1.2 and 1.2 (P* = 1.3)."""
    return [
        LocalProblemData([1, 1, 1], [[-1, -1, -1]], [-1.5]),
        LocalProblemData([1, 1, 1], [[-1, -1, 0], [0, 0, -1]], [-1.0, -0.2]),
        LocalProblemData([1, 1, 1], [[0, -1, -1], [1, 0, 0]], [-1.2, 0.5]),
    ]


ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture
def report(request, capsys):
    """Print one pass/fail line for an acceptance criterion and keep it for the summary."""

    def emit(number, ok, detail):
        line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.stash.setdefault(ACCEPTANCE_LINES, []).append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
