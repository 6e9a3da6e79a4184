"""Shared pytest wiring: acceptance verdicts echoed after the run."""

ACCEPTANCE_LINES = []


def record_verdict(line):
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
