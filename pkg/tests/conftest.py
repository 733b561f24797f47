"""Collects acceptance-criterion outcomes and prints one line per criterion after the run."""
import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): an acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when == "teardown":
        return
    if report.when == "setup" and report.passed:
        return
    number, title = marker.args
    measured = dict(item.user_properties).get("measured", "")
    # parametrised criteria pass only if every case passes
    previous = _CRITERIA.get(number)
    passed = report.passed and (previous is None or previous[1])
    _CRITERIA[number] = (title, passed, measured or (previous[2] if previous else ""))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        title, passed, measured = _CRITERIA[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status} criterion {number:2d} {title}: {measured}")
