import numpy as np
import pytest

from nonlocal_arz import Grid, make_pipes_flux, uniform_kernel, zero_kernel


@pytest.fixture
def lwr():
    return make_pipes_flux(1.0)


@pytest.fixture
def pipes2():
    return make_pipes_flux(2.0)


@pytest.fixture
def uniform():
    return uniform_kernel()


@pytest.fixture
def nokernel():
    return zero_kernel()


@pytest.fixture
def grid():
    return Grid(-10.0, 30.0, 800)


def gaussian(x, a=0.5, c=0.0, w=1.0):
    return a * np.exp(-(((x - c) / w) ** 2))


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def record_acceptance(number, label, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {label}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
