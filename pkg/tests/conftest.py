import pytest

_outcomes: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    label = str(marker.args[0])
    failed = report.failed or (report.when == "call" and report.skipped)
    if report.when == "call" or failed:
        prev = _outcomes.get(label, True)
        _outcomes[label] = prev and not failed


def _sort_key(label):
    num = "".join(ch for ch in label if ch.isdigit())
    return int(num), label


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_outcomes, key=_sort_key):
        terminalreporter.write_line(f"criterion {label}: {'PASS' if _outcomes[label] else 'FAIL'}")
