import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.outcome != "passed"):
        return
    number, title = mark.args
    reason = ""
    if rep.failed and call.excinfo is not None:
        reason = str(call.excinfo.value).strip().splitlines()[0][:160]
    _CRITERIA[number] = (title, rep.outcome, reason)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, outcome, reason = _CRITERIA[number]
        status = "PASS" if outcome == "passed" else "FAIL" if outcome == "failed" else outcome.upper()
        line = f"criterion {number}: {status}  {title}"
        if reason:
            line += f"  ({reason})"
        terminalreporter.write_line(line)
