from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from floatwatch import kernels
from floatwatch._accel import HAVE_NUMBA
from floatwatch.imaging import Frame

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FLAVOURS = ["numba", "numpy"] if HAVE_NUMBA else ["numpy"]


@pytest.fixture(params=FLAVOURS)
def impl(request):
    """Kernel table of one implementation; tests using it run once per flavour."""
    return kernels.IMPLEMENTATIONS[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def gray(values, seq=0, timestamp=0) -> Frame:
    return Frame(np.asarray(values, dtype=np.uint8), timestamp=timestamp, seq=seq)


# one PASS/FAIL line per acceptance criterion, collected by test_acceptance
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
