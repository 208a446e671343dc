import numpy as np
import pytest

from hexcal import PoseVector, reference_geometry


@pytest.fixture(scope="session")
def geom():
    return reference_geometry()


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def random_pose(rng, geom, shrink=1.0):
    lo = np.array(geom.pose_bounds.lower) * shrink
    hi = np.array(geom.pose_bounds.upper) * shrink
    return PoseVector.from_array(rng.uniform(lo, hi))


# one summary line per acceptance criterion, printed after the run
_CRITERIA = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    number = int(name.split("_")[2])
    _CRITERIA[number] = (name, report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        name, outcome = _CRITERIA[number]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {verdict}  ({name})")
