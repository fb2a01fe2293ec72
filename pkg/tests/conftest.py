import warnings

import pytest

from zpfluid.moments import RegimeWarning
from zpfluid.physmodel import he3_preset, pulse_duration

# (criterion number, passed, detail) appended by tests/test_acceptance.py
ACCEPTANCE = []


@pytest.fixture
def he3():
    return he3_preset()


@pytest.fixture
def he3_tau(he3):
    medium, pulse = he3
    return pulse_duration(pulse, medium)


@pytest.fixture
def quiet_regime():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE, key=lambda t: t[0]):
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
