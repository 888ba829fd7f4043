import math

import pytest

from nonbloch.model import single_band, ssh_model


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")
    config._criteria = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker and rep.when == "call":
        detail = getattr(item, "detail", "")
        item.config._criteria.append((marker.args[0], rep.passed, detail))


def pytest_terminal_summary(terminalreporter, config):
    rows = sorted(config._criteria)
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in rows:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")


@pytest.fixture
def report(request):
    """Attach a one-line result to the running test and echo it."""

    def _report(text):
        request.node.detail = text
        print(text)

    return _report


FIG1 = {-2: 0.25, -1: 1, 1: 1}
FIG2 = {-2: 1, -1: 1, 1: 1}
FIG3A = {-3: 1, 1: 1}
FIG3B = {-2: 0.25, -1: 1.5, 1: 2}
FIG3C = {-2: 1, -1: 3, 1: 1}
S2A = {-2: 0.5, -1: 1, 1: 1}
S2B = {-2: 0.5, -1: 1, 1: (2 + math.sqrt(2)) / 2}
HERM = {-1: 1, 1: 1}


@pytest.fixture(scope="session")
def fig1():
    return single_band(FIG1, "fig1")


@pytest.fixture(scope="session")
def fig2():
    return single_band(FIG2, "fig2")


@pytest.fixture(scope="session")
def fig3a():
    return single_band(FIG3A, "fig3a")


@pytest.fixture(scope="session")
def fig3b():
    return single_band(FIG3B, "fig3b")


@pytest.fixture(scope="session")
def fig3c():
    return single_band(FIG3C, "fig3c")


@pytest.fixture(scope="session")
def herm():
    return single_band(HERM, "hermitian")


@pytest.fixture(scope="session")
def sshb():
    return ssh_model(1, 1, 0.2, 0.25, "sshb")


@pytest.fixture(scope="session")
def sshc():
    return ssh_model(1, 0.5, -0.1, 0.25, "sshc")
