import pytest

from simse.devs import INPUT, Event
from simse.models import mediator_spec
from simse.models.fms import coordinate, measure


@pytest.fixture(scope="session")
def mediator():
    return mediator_spec()


@pytest.fixture
def golden_injections():
    """Coordinates at t=2 and t=3, a measure at t=5 (depth 7)."""
    return [Event(2.0, (), "FromCoordinate", INPUT, coordinate(1)),
            Event(3.0, (), "ToCoordinate", INPUT, coordinate(2)),
            Event(5.0, (), "FromSensors", INPUT, measure(1, 7))]


_CRITERIA = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rpartition("::")[2]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call" or report.failed:
        _CRITERIA.setdefault(name, report.outcome)
        if report.failed:
            _CRITERIA[name] = "failed"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA):
        num, _, label = name[len("test_criterion_"):].partition("_")
        verdict = "PASS" if _CRITERIA[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {int(num):2d} {verdict}  {label.replace('_', ' ')}")
