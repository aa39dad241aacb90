"""Shared test configuration and the acceptance summary."""

from hypothesis import settings

settings.register_profile("default", deadline=None)
settings.load_profile("default")

# (criterion number, title, passed, detail) filled in by test_acceptance
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, passed, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {num:2d} {title}: {detail}")
