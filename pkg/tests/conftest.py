import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from deepwh import StableParams
from deepwh.quadrature import QuadConfig

settings.register_profile(
    "deepwh",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("deepwh")

# Admissible pairs spanning both regimes, including asymmetric cases.
SMALL_ALPHA = [(0.5, 0.3), (0.6, 0.5), (0.8, 0.5), (0.8, 0.7), (1.0, 0.5)]
BIG_ALPHA = [(1.3, 0.4), (1.3, 0.6), (1.5, 0.5), (1.7, 0.45), (1.7, 0.55)]
ALL_PARAMS = SMALL_ALPHA + BIG_ALPHA

TIGHT = QuadConfig(rel_tol=1e-13, abs_tol=1e-16, max_levels=14)


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


@pytest.fixture(params=ALL_PARAMS, ids=lambda p: f"a{p[0]}-r{p[1]}")
def any_params(request):
    return StableParams(*request.param)


@pytest.fixture(params=SMALL_ALPHA, ids=lambda p: f"a{p[0]}-r{p[1]}")
def small_params(request):
    return StableParams(*request.param)


@pytest.fixture(params=BIG_ALPHA, ids=lambda p: f"a{p[0]}-r{p[1]}")
def big_params(request):
    return StableParams(*request.param)


# Acceptance results, printed once per criterion at the end of the run.
ACCEPTANCE: dict = {}


@pytest.fixture
def record_criterion():
    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        ACCEPTANCE[number] = (title, bool(passed), detail)
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{number:02d}] {'PASS' if passed else 'FAIL'}  {title}: {detail}")
