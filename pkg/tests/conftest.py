import pytest

from flywheel.model import AnnulusGeometry, steel_4340


@pytest.fixture
def steel():
    return steel_4340()


@pytest.fixture
def annulus():
    return AnnulusGeometry(0.2, 1.0)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
