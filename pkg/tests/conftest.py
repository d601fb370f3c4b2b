import numpy as np
import pytest

from hmcflow.geometry import ThetaGrid


@pytest.fixture
def grid64():
    return ThetaGrid(64)


@pytest.fixture
def grid128():
    return ThetaGrid(128)


def ellipse_support(theta, a, b):
    return np.sqrt((a * np.cos(theta)) ** 2 + (b * np.sin(theta)) ** 2)


ACCEPTANCE_KEY = "_acceptance_lines"


@pytest.fixture
def criterion(request):
    """Call criterion(number, ok, detail) once per acceptance criterion."""
    lines = request.config.__dict__.setdefault(ACCEPTANCE_KEY, [])

    def report(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append((number, line))
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get(ACCEPTANCE_KEY)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines):
        terminalreporter.write_line(line)
