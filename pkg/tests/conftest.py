import pytest

from gridswitch.network import fixture_39bus, make_network, scale_ratings

_ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture
def triangle():
    """Three buses, equal reactances, 100 MW load at bus 3."""
    return make_network([(1, 0.0), (2, 0.0), (3, 100.0)],
                        [(1, 2, 0.1, 100), (2, 3, 0.1, 100), (1, 3, 0.1, 100)],
                        [(1, 0, 200)])


@pytest.fixture
def two_bus():
    return make_network([(1, 0.0), (2, 80.0)], [(1, 2, 0.1, 50)], [(1, 0, 100)])


@pytest.fixture(scope="session")
def net39():
    return fixture_39bus()


@pytest.fixture(scope="session")
def net39_derated():
    # 2% MVA->MW allowance: the variant where level 1 has to shed load
    return scale_ratings(fixture_39bus(), 0.98)
