"""Prints one PASS/FAIL line per acceptance criterion at the end of the run."""
import pytest

_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n = marker.args[0]
    if report.when == "call" or (report.when == "setup" and report.skipped):
        detail = dict(item.user_properties).get("detail", "")
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        _results[n] = (status, item.name, detail)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        status, name, detail = _results[n]
        line = f"criterion {n:>2}: {status}  {name}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
