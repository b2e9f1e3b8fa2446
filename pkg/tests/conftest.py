import os
import random

import pytest
from hypothesis import settings

settings.register_profile("qlh", max_examples=25, deadline=None, derandomize=True)
settings.load_profile("qlh")


@pytest.fixture
def rng():
    return random.Random(int(os.environ.get("QLH_SEED", "0")))


_CRITERIA = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.split("::")[-1]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    n = int(name.split("_")[2])
    if report.when == "call" or report.outcome != "passed":
        ok = report.outcome == "passed"
        _CRITERIA[n] = _CRITERIA.get(n, True) and ok


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if _CRITERIA[n] else 'FAIL'}")
