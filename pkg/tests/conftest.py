import numpy as np
import pytest

from ricci_pinch import flow
from ricci_pinch.cli import builtin_config, builtin_names


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_cache = {}


def builtin_run(name):
    """Integrate a built-in scenario once per session."""
    if name not in _cache:
        cfg = builtin_config(name)
        _cache[name] = (cfg, flow.integrate(cfg.geometry, cfg.t_end, cfg.controls))
    return _cache[name]


@pytest.fixture(scope="session")
def run_builtin():
    return builtin_run


@pytest.fixture(scope="session")
def scenario_names():
    return builtin_names()


ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record a pass/fail line for an acceptance criterion."""

    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
