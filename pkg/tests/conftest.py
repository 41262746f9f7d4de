"""Shared test plumbing: collects the acceptance suite's pass/fail lines."""

_LINES: list[str] = []


def record(line: str) -> None:
    _LINES.append(line)
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
