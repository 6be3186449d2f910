import os

from hypothesis import HealthCheck, settings

import report

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=300,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def _key(k: str):
    num = "".join(c for c in k if c.isdigit())
    return (int(num) if num else 0, k)


def pytest_terminal_summary(terminalreporter):
    if not report.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(report.LINES, key=_key):
        terminalreporter.write_line(report.LINES[k])
