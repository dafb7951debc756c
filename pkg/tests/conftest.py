import numpy as np
import pytest
from hypothesis import settings

from fracmean.models import grid1d, grid2d, sqline, tree
from fracmean.rearrange import SampledFunction

settings.register_profile("fracmean", max_examples=40, deadline=None)
settings.load_profile("fracmean")


@pytest.fixture(scope="session")
def line4():
    return grid1d(4, 1)


@pytest.fixture(scope="session")
def f3102(line4):
    return SampledFunction(line4, np.array([3.0, 1.0, 0.0, 2.0]), "f3102")


@pytest.fixture(scope="session")
def line64():
    return grid1d(64, 1)


@pytest.fixture(scope="session")
def sq32():
    return sqline(32)


@pytest.fixture(scope="session")
def lattice8():
    return grid2d(8, 1)


@pytest.fixture(scope="session")
def tree4():
    return tree(4)


# one summary line per acceptance criterion
ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    number, title = mark.args
    detail = getattr(item, "criterion_detail", "")
    ACCEPTANCE[number] = (title, "PASS" if rep.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, verdict, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d} {verdict}  {title}  {detail}")
