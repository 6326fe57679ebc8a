"""Collects the acceptance verdicts and prints them after the test run."""
import pytest

VERDICTS = []


@pytest.fixture
def verdict():
    """``verdict(label, ok, detail)`` records one acceptance line."""

    def record(label, ok, detail=""):
        VERDICTS.append((label, "PASS" if ok else "FAIL", detail))
        return ok

    return record


@pytest.fixture
def skipped():
    def record(label, reason):
        VERDICTS.append((label, "SKIP", reason))
        pytest.skip(reason)

    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, status, detail in VERDICTS:
        terminalreporter.write_line(f"{status}  {label}: {detail}")
