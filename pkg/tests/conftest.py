import hypothesis
import numpy as np
import pytest

from vbcswitch.switch import IDEAL, NoiseModel, compute_behavior

np.seterr(all="warn", under="ignore")

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def ideal_behavior():
    return compute_behavior(IDEAL)


@pytest.fixture(scope="session")
def experiment_noise():
    return NoiseModel(visibility=0.98, werner_p=0.92)


@pytest.fixture(scope="session")
def experiment_behavior(experiment_noise):
    return compute_behavior(experiment_noise)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
