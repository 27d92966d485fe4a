import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_ACCEPTANCE, [])
    if results:
        terminalreporter.section("acceptance criteria")
        for res in sorted(results, key=lambda r: r.number):
            terminalreporter.write_line(res.line())
