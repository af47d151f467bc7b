import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_LINES: list[str] = []


@pytest.fixture
def criterion(request):
    """Call with (number, ok, detail); prints one PASS/FAIL line and asserts."""
    capmanager = request.config.pluginmanager.getplugin("capturemanager")

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _LINES.append(line)
        with capmanager.global_and_fixture_disabled():
            print(f"\n{line}")
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
