import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

CRITERIA = {}


def record(number: int, ok: bool, detail: str):
    CRITERIA[number] = (bool(ok), detail)
    print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def builtin_reports():
    from twistorcheck.scenarios import builtin_scenarios, get_builtin, run_scenario

    return {name: run_scenario(get_builtin(name)) for name in builtin_scenarios()}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        ok, detail = CRITERIA[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
