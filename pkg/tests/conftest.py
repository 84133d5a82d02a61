import numpy as np
import pytest

from udset.construction import build_tables


@pytest.fixture(scope="session")
def tables():
    return build_tables(8)


@pytest.fixture(scope="session")
def deep_tables():
    return build_tables(14)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS, summary_lines
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in summary_lines():
        terminalreporter.write_line(line)
