import numpy as np
import pytest

from online_checkpointing.core import random_schedule


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running reproduction runs (deselect with -m 'not slow')")


def random_schedules(count=200, seed=12345, k_max=8, steps_max=30):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        k = int(rng.integers(1, k_max + 1))
        steps = int(rng.integers(0, steps_max + 1))
        out.append(random_schedule(rng, k, steps))
    return out


@pytest.fixture(scope="session")
def schedules():
    return random_schedules()


def pytest_terminal_summary(terminalreporter):
    import sys

    lines = []
    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance") and hasattr(mod, "RESULTS"):
            lines.extend(mod.RESULTS)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
