import numpy as np
import pytest

from mcflab.field import Grid


@pytest.fixture
def grid1():
    return Grid(1, 4096)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.REPORT):
        terminalreporter.write_line(mod.REPORT[k])
