"""Shared fixtures: the heavy 20-seed sweeps run once per session.

Also collects one PASS/FAIL line per acceptance criterion and prints the
block after the run, so the gate status is readable without digging
through individual test output.
"""

import pytest
from hypothesis import settings

from dwgc import eval as ev
from dwgc.synth import ArSimConfig, NarSimConfig

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")

ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def record_acceptance(criterion: str, passed: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (passed, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[cid]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE {cid}: {verdict} - {detail}")


@pytest.fixture(scope="session")
def ar_naive_report():
    """Linear benchmark, plain windowed F-test, the full table grid."""
    return ev.sweep(
        ArSimConfig(), method="naive_dwgc", window_lengths=(10, 20, 30, 100), n_seeds=20
    )


@pytest.fixture(scope="session")
def ar_dwgc_report():
    """Linear benchmark with index optimization at the short lengths."""
    return ev.sweep(ArSimConfig(), method="dwgc", window_lengths=(10, 20), n_seeds=20)


@pytest.fixture(scope="session")
def nar_naive_report():
    return ev.sweep(
        NarSimConfig(), method="naive_dwgc", window_lengths=(10, 20), n_seeds=20
    )


@pytest.fixture(scope="session")
def nar_dwgc_report():
    return ev.sweep(NarSimConfig(), method="dwgc", window_lengths=(10, 20), n_seeds=20)


@pytest.fixture(scope="session")
def theorem1_result():
    return ev.theorem1_check(ArSimConfig(), n_seeds=20)
