import math

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# filled by test_acceptance, reported at the end of the session
ACCEPTANCE_RESULTS: dict[int, tuple[str, str]] = {}


def ulp_diff(a: float, b: float, scale: float | None = None) -> float:
    """|a - b| in units of the last place of ``scale`` (default: the larger of |a|, |b|)."""
    s = max(abs(a), abs(b)) if scale is None else abs(scale)
    if a == b:
        return 0.0
    if s == 0:
        return math.inf
    return abs(a - b) / math.ulp(s)


@pytest.fixture
def ulps():
    return ulp_diff


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        status, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {detail}")
