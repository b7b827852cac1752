import numpy as np
import pytest

from scoresim.scenario import (
    AttributeSpec,
    GlobalSpec,
    LevelSpec,
    MarginalSpec,
    ScenarioSpec,
    attribute_from_lists,
    bundled_base,
    bundled_shift,
)


@pytest.fixture(scope="session")
def base_spec():
    return bundled_base()


@pytest.fixture(scope="session")
def shift_spec(base_spec):
    return bundled_shift(base_spec)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def binary_scenario(p=0.2, gamma=2.7, d=0.10, n=50_000):
    attr = attribute_from_lists("existing", [1 - p, p], [1.0, gamma], ["Yes", "No"])
    return ScenarioSpec(GlobalSpec(n, d, seed=1, replications=10), (attr,))


def small_mixed_scenario(n=5_000, d=0.1):
    attrs = (
        attribute_from_lists("channel", [0.5, 0.3, 0.2], [1.0, 0.6, 1.8]),
        AttributeSpec(
            "age",
            "continuous",
            MarginalSpec("bucket_uniform"),
            (
                LevelSpec("young", 0.3, 1.0, (18.0, 30.0)),
                LevelSpec("mid", 0.5, 0.7, (30.0, 50.0)),
                LevelSpec("old", 0.2, 0.5, (50.0, 75.0)),
            ),
        ),
        AttributeSpec(
            "cards",
            "ratio",
            MarginalSpec("categorical"),
            (
                LevelSpec("0", 0.6, 1.0, (0.0, 1.0)),
                LevelSpec("1", 0.3, 1.5, (1.0, 2.0)),
                LevelSpec("2+", 0.1, 2.5, (2.0, 3.0)),
            ),
        ),
    )
    return ScenarioSpec(GlobalSpec(n, d, seed=3, replications=5), attrs)


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    lines = getattr(request.config, "_acceptance_lines", None)
    if lines is None:
        lines = request.config._acceptance_lines = []
    return lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
