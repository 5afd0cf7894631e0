import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


_ACCEPTANCE = pytest.StashKey()


@pytest.fixture
def verdict(request):
    """Record one acceptance line; the lines are printed again in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])
    reporter = request.config.pluginmanager.getplugin("terminalreporter")

    def emit(label, passed, detail=""):
        line = f"{'PASS' if passed else 'FAIL'}  {label}  {detail}".rstrip()
        lines.append(line)
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        return passed

    return emit


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
