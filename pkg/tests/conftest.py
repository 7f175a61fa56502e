import pytest

_criteria: list[tuple[int, str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and not report.passed):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        detail = "".join(f" [{v}]" for k, v in item.user_properties if k == "detail")
        if report.skipped and isinstance(report.longrepr, tuple):
            detail = f" ({report.longrepr[2]})"
        _criteria.append((number, f"[{status}] criterion {number}: {title}{detail}", status))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for _, line, _ in sorted(_criteria):
        terminalreporter.write_line(line)
