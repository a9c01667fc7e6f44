from __future__ import annotations

import pytest

_KEY = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record ``(criterion, passed, detail)``; the summary prints one line each."""
    store = request.config.stash.setdefault(_KEY, {})

    def record(number: int, passed: bool, detail: str) -> None:
        store[number] = (passed, detail)
        print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
        assert passed, detail

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_KEY, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        passed, detail = store[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
