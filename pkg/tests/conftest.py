import os

import pytest
from hypothesis import HealthCheck, settings

from nucagate import CacheGeometry

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


# 8 banks x 2 KiB, 4-way: 8 sets per bank
SMALL = CacheGeometry(num_banks=8, bank_capacity=2048, associativity=4)


@pytest.fixture
def small_geometry():
    return SMALL


def line_value(byte: int) -> bytes:
    return bytes([byte]) * 64


# one "PASS|FAIL  criterion: detail" line per acceptance criterion, filled by test_acceptance
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
