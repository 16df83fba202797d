"""Shared fixtures and the acceptance-criteria reporting hook.

The acceptance tests register one line per criterion through
``record_criterion``; the terminal summary prints them in order so a single
``pytest`` run shows the pass/fail state of every criterion at a glance.
"""

from __future__ import annotations

from contextlib import contextmanager

from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    derandomize=True,
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

# (number, description, passed) tuples, filled in by tests/test_acceptance.py.
CRITERION_LINES: list[tuple[int, str, bool]] = []


def record_criterion(number: int, description: str, passed: bool) -> None:
    CRITERION_LINES.append((number, description, passed))


@contextmanager
def criterion(number: int, description: str):
    """Record the criterion as failed if the body raises, passed otherwise."""
    try:
        yield
    except BaseException:
        record_criterion(number, description, False)
        raise
    record_criterion(number, description, True)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, description, passed in sorted(CRITERION_LINES):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[criterion {number}] {status} - {description}")
