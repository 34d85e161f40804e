"""Shared fixtures and the acceptance-criteria summary hook."""

import sys

import pytest

from viewplan.tammes import tammes_hemisphere


@pytest.fixture(scope="session")
def tammes_cache():
    """Memoized maximin solves so slow configurations are shared across tests."""
    cache = {}

    def solve(n, radius=0.3, seed=0, restarts=8, iters=600):
        key = (n, radius, seed, restarts, iters)
        if key not in cache:
            cache[key] = tammes_hemisphere(n, radius=radius, seed=seed,
                                           restarts=restarts, iters=iters)
        return cache[key]

    return solve


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one line per acceptance criterion after the run."""
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "CRITERION_LINES", None) if mod else None
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(lines):
        terminalreporter.write_line(lines[num])
