import re

import pytest

_AC_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one 'ACn PASS|FAIL detail' line; returns the verdict for asserting."""

    def _report(tag: str, ok: bool, detail: str) -> bool:
        line = f"{tag} {'PASS' if ok else 'FAIL'} {detail}"
        _AC_LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if not _AC_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in sorted(_AC_LINES, key=lambda s: int(re.match(r"AC(\d+)", s).group(1))):
        terminalreporter.write_line(line)
