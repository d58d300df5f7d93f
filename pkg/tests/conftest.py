import pytest

_results: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    n, title = mark.args
    prev = _results.get(n, (title, True, ""))
    ok = prev[1] and not rep.failed
    detail = prev[2] or (item.name if rep.failed else "")
    if rep.when == "call" or rep.failed:
        _results[n] = (title, ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        title, ok, detail = _results[n]
        line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}"
        if not ok:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
