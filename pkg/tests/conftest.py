from __future__ import annotations

from collections import OrderedDict
from pathlib import Path

import pytest

from serpscope.serp import load_profile

FIXTURES = Path(__file__).parent / "fixtures"

# criterion label -> list of (test id, passed)
_acceptance: "OrderedDict[str, list[tuple[str, bool]]]" = OrderedDict()


@pytest.fixture(scope="session")
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def profile():
    return load_profile()


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None or call.when != "call":
        return
    _acceptance.setdefault(marker.args[0], []).append((item.name, call.excinfo is None))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_acceptance, key=lambda s: int(s.split(".")[0])):
        results = _acceptance[label]
        ok = all(passed for _, passed in results)
        failed = [name for name, passed in results if not passed]
        line = f"{'PASS' if ok else 'FAIL'}  {label}"
        if failed:
            line += f"  (failing: {', '.join(failed)})"
        terminalreporter.write_line(line)
