import math

import pytest

from acasimir.acoustics import AcousticEnvironment, Bandwidth, design_bandwidth
from acasimir.mems import LumpedDevice

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def narrow_band() -> Bandwidth:
    return Bandwidth(9e7, 1e8)


@pytest.fixture
def design_band() -> Bandwidth:
    return design_bandwidth(40e-6, 1, 340.0, 0.075)


@pytest.fixture
def env() -> AcousticEnvironment:
    return AcousticEnvironment.from_product(0.8, c=340.0, intensity=1e-4)


@pytest.fixture
def device() -> LumpedDevice:
    return LumpedDevice(k_spring=1.0, D=60e-6, A=1e-8)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: (s.split()[0], s)):
        terminalreporter.write_line(line)


def rel_diff(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), math.ulp(0.0))
