from __future__ import annotations

# filled by tests/test_acceptance.py: (number, title, passed, seconds, limit)
ACCEPTANCE_LINES: list[tuple[int, str, bool, float, float]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, seconds, limit in sorted(ACCEPTANCE_LINES):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} {status}  {title}  ({seconds:.2f}s, limit {limit:g}s)")
