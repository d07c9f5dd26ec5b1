from __future__ import annotations

import pytest

# criterion number -> (title, outcome, detail); filled by the acceptance module
ACCEPTANCE: dict[int, list] = {}


@pytest.fixture
def criterion(request):
    """Record a detail line for the acceptance criterion of the running test."""
    marker = request.node.get_closest_marker("acceptance")
    number, title = marker.args
    entry = ACCEPTANCE.setdefault(number, [title, None, ""])

    def record(detail: str) -> None:
        entry[2] = detail
        print(f"criterion {number} ({title}): {detail}")

    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or rep.when != "call":
        return
    number, title = marker.args
    entry = ACCEPTANCE.setdefault(number, [title, None, ""])
    entry[1] = rep.passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {number:>2}. {title}: {detail}")


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")
    config.addinivalue_line("markers", "slow: runs longer than a few seconds")
