"""Collects per-criterion outcomes from tests marked ``criterion`` and prints
one PASS/FAIL line per criterion at the end of the session."""

import pytest

_OUTCOMES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.skipped:
        return
    number, title = mark.args
    entry = _OUTCOMES.setdefault(number, {"title": title, "ok": True, "tests": []})
    if report.when == "call" or report.failed:
        if item.nodeid not in entry["tests"]:
            entry["tests"].append(item.nodeid)
        if report.failed:
            entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        e = _OUTCOMES[number]
        status = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(f"{status} criterion {number}: {e['title']} ({len(e['tests'])} checks)")
