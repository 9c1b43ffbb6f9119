import pytest

_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record a one-line PASS/FAIL summary for the terminal report."""
    def record(label: str, ok: bool, detail: str):
        _VERDICTS.append(f"{label}: {'PASS' if ok else 'FAIL'} {detail}")
        print(_VERDICTS[-1])
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
