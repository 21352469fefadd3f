"""Shared pytest hooks.

The acceptance tests record one verdict line each; replay them after the
run summary so they are visible even under pytest's output capture.
"""

import sys


def pytest_terminal_summary(terminalreporter):
    for name in ("test_acceptance", "tests.test_acceptance"):
        mod = sys.modules.get(name)
        if mod is not None:
            break
    lines = getattr(mod, "VERDICT_LINES", None) if mod else None
    if lines:
        terminalreporter.section("acceptance verdicts")
        for line in lines:
            terminalreporter.line(line)
