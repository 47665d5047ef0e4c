import sys

import numpy as np
import pytest

from openqubits.qstate import build_state, ket2dm


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def w_state():
    return ket2dm(build_state("W"))


@pytest.fixture
def ghz_state():
    return ket2dm(build_state("GHZ"))


@pytest.fixture
def phi_plus():
    psi = np.zeros(4, dtype=complex)
    psi[0] = psi[3] = 1 / np.sqrt(2)
    return ket2dm(psi)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS.values():
            terminalreporter.write_line(line)
