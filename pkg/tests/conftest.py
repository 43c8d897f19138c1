from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tlsserver import make_self_signed  # noqa: E402


@pytest.fixture(scope="session")
def rsa_cert_pair() -> tuple[bytes, bytes]:
    return make_self_signed("rsa", "rsa.probe.test")


@pytest.fixture(scope="session")
def ecc_cert_pair() -> tuple[bytes, bytes]:
    return make_self_signed("ecc", "ecc.probe.test")


def pytest_runtest_logreport(report):
    """One visible line per acceptance criterion, pass or fail."""
    if "test_acceptance.py" not in report.nodeid or report.when != "call":
        return
    name = report.nodeid.split("::")[-1]
    outcome = "PASS" if report.passed else "FAIL"
    print(f"\nACCEPTANCE {outcome}: {name}", file=sys.stderr)
