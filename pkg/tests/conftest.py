import sys

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ldps", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("ldps")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(lines):
        terminalreporter.write_line(lines[cid])


@pytest.fixture
def mp():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40
    return mpmath
