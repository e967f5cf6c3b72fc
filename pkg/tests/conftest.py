import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session", autouse=True)
def chernoff_cache(tmp_path_factory):
    """Keep the Chernoff table cache inside the test session unless one is configured."""
    if "MODALREG_CACHE_DIR" in os.environ:
        yield os.environ["MODALREG_CACHE_DIR"]
        return
    path = tmp_path_factory.mktemp("chernoff-cache")
    os.environ["MODALREG_CACHE_DIR"] = str(path)
    yield str(path)
    del os.environ["MODALREG_CACHE_DIR"]


@pytest.fixture(scope="session")
def default_table(chernoff_cache):
    from modalreg import chernoff
    return chernoff.default_table()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
