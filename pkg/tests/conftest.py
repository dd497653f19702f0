import numpy as np
import pytest

from survdom.datasets import load_fixture


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run the full simulation sweep"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="full sweep; use --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def lung():
    """(male, female) samples."""
    return load_fixture("lung", groups=("male", "female"))


@pytest.fixture(scope="session")
def kidney():
    """(percutaneous, surgical) samples."""
    return load_fixture("kidney", groups=("percutaneous", "surgical"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
