import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from randfeas import AffineConstraints, RandomSource, WholeSpace, generate_qcqp, qcqp_problem
from randfeas.core import Purpose, stream_id

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def two_halfspaces():
    """Y = R^2 with x1 <= 1 and x2 <= 1."""
    return AffineConstraints(np.eye(2), np.ones(2)), WholeSpace()


@pytest.fixture(scope="session")
def qcqp_known():
    inst = generate_qcqp(10, 100, "known", RandomSource(0, stream_id(0, Purpose.PROBLEM)))
    return inst, qcqp_problem(inst)


@pytest.fixture(scope="session")
def qcqp_small_known():
    inst = generate_qcqp(4, 12, "known", RandomSource(3, stream_id(0, Purpose.PROBLEM)))
    return inst, qcqp_problem(inst)
