"""Shared pytest wiring for the acceptance harness.

The acceptance tests record one verdict line per criterion here; the
terminal summary hook prints them after the run, where output capture no
longer hides them.
"""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
