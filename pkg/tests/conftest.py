import os

import pytest
from hypothesis import HealthCheck, settings

from etale import builders
from etale.unitspace import UnitSpace

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def odo3():
    return builders.odometer(3)


@pytest.fixture(scope="session")
def odo3p():
    return builders.odometer(3, mode="principal")


@pytest.fixture(scope="session")
def pair2():
    return builders.pair_groupoid(UnitSpace(2, 1))


@pytest.fixture(scope="session")
def z4():
    return builders.group_bundle(4)


@pytest.fixture(scope="session")
def units_only():
    return builders.group_bundle(1, UnitSpace(2, 3))


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n][2])
    passed = sum(1 for v in RESULTS.values() if v[0] == "PASS")
    terminalreporter.write_line(f"{passed}/{len(RESULTS)} criteria passed")
