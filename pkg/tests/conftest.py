"""Test-suite root; keeps the oracle helpers importable and prints the
acceptance-criteria summary at the end of a run."""

ACCEPTANCE_LINES: list[str] = []


def report_criterion(name: str, ok: bool, detail: str) -> None:
    """Record and echo one acceptance-criterion verdict."""
    line = f"{name} {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
