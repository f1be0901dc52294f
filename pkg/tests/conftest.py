"""Shared fixtures plus always-visible acceptance reporting.

Acceptance tests record one line per criterion; the terminal-summary hook
prints them after the run regardless of capture settings.
"""
import numpy as np
import pytest

from epirisk import GravityConfig, Region, build_graph

_ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance_record():
    """Record one pass/fail line for a criterion; returns the verdict."""

    def record(criterion, ok, detail):
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] criterion {criterion}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def random_regions(rng, n, side_m=50000.0, pop_range=(1000.0, 30000.0)):
    pops = np.exp(rng.uniform(np.log(pop_range[0]), np.log(pop_range[1]), n))
    xs = rng.uniform(0, side_m, n)
    ys = rng.uniform(0, side_m, n)
    return [
        Region(region_id=f"r{j:03d}", population=float(pops[j]),
               x_m=float(xs[j]), y_m=float(ys[j]))
        for j in range(n)
    ]


@pytest.fixture
def small_graph():
    rng = np.random.default_rng(11)
    regions = random_regions(rng, 9)
    for r in regions:
        r.features = rng.normal(size=4)
    return build_graph(regions, GravityConfig(k=3, delta_m=15000.0))
