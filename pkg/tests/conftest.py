import pytest

_OUTCOMES: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


def pytest_runtest_logreport(report):
    label = getattr(report, "criterion", None)
    if label is None:
        return
    if report.failed:
        _OUTCOMES[label] = "FAIL"
    elif report.when == "call" and report.passed:
        _OUTCOMES.setdefault(label, "PASS")
    elif report.skipped:
        _OUTCOMES.setdefault(label, "SKIP")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for label, status in _OUTCOMES.items():
        terminalreporter.write_line(f"{status} {label}")
