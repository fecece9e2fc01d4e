import pytest

from trojancavity.cavity import REFERENCE_CAVITY, derive_mode_constants
from trojancavity.classical import SystemParams, equilibrium_state
from trojancavity.gaussian import QuadraticParams
from trojancavity.presets import OPTIMAL_Q, TABLE_DETUNING


@pytest.fixture(scope="session")
def modes():
    return derive_mode_constants(REFERENCE_CAVITY)


@pytest.fixture(scope="session")
def ref(modes):
    """Reference operating point: cavity couplings with the optimal force ratio."""
    return SystemParams.from_q(modes.q_tilde, modes.gamma, OPTIMAL_Q)


@pytest.fixture(scope="session")
def ref_eq(ref):
    return equilibrium_state(ref, 0.0)


@pytest.fixture(scope="session")
def table_params():
    """Operating point at which the tabulated coefficients are reproduced."""
    return QuadraticParams.from_detuning(OPTIMAL_Q, TABLE_DETUNING)


# -- acceptance summary ------------------------------------------------------

ACCEPTANCE: dict[int, str] = {}
_SESSION: dict[str, float] = {}


def pytest_sessionstart(session):
    import time

    _SESSION["start"] = time.perf_counter()


def pytest_terminal_summary(terminalreporter):
    import time

    if not ACCEPTANCE:
        return
    elapsed = time.perf_counter() - _SESSION.get("start", time.perf_counter())
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
    verdict = "PASS" if elapsed < 300 else "FAIL"
    terminalreporter.write_line(f"SUITE RUNTIME {verdict}: {elapsed:.1f} s (limit 300 s)")
