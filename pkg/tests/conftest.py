import pytest

_RESULTS = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or report.when != "call" and not (report.when == "setup" and report.failed):
        return
    if report.when == "call":
        item.rep_call = report
    number, title = mark.args
    _RESULTS[number] = (title, "PASS" if report.passed else "FAIL", item.user_properties)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, status, props = _RESULTS[number]
        detail = "; ".join(f"{k}={v}" for k, v in props)
        terminalreporter.write_line(f"[{status}] {number:>2}. {title}" + (f" ({detail})" if detail else ""))
