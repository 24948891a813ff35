import os

import numpy as np
import pytest
from hypothesis import settings

from perceptrisk.config import data_path, load_action_csv
from perceptrisk.cost import load_cost_csv

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion number -> (passed, description, detail), filled by test_acceptance
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str, str]] = {}


@pytest.fixture(scope="session")
def table1():
    return load_cost_csv(data_path("costs", "gtsrb10.csv"))


@pytest.fixture(scope="session")
def actions():
    return load_action_csv(data_path("actions", "gtsrb10_actions.csv"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, desc, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {desc}: {detail}")
