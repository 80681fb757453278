"""One summary line per acceptance criterion at the end of the run."""

import pytest


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")
    config._acceptance = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        number, title = marker.args
        # an unexpected pass of an xfail-marked criterion is still a pass
        passed = rep.outcome == "passed"
        details = [v for k, v in item.user_properties if k == "detail"]
        if rep.outcome == "failed" and not details:
            details = [f"error: {call.excinfo.typename}" if call.excinfo else "error"]
        item.config._acceptance[number] = (title, passed, details)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_acceptance", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, passed, details = results[number]
        terminalreporter.write_line(f"criterion {number} {'PASS' if passed else 'FAIL'}: {title}")
        for d in details:
            terminalreporter.write_line(f"    {d}")
