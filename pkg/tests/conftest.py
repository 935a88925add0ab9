import pytest

from hypershift import make_dyadic_family, make_perturbed_family

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def dyadic():
    return make_dyadic_family(20)


@pytest.fixture(scope="session")
def pert_const():
    return make_perturbed_family(20, 0.1, "constant")


@pytest.fixture(scope="session")
def pert_geom():
    return make_perturbed_family(20, 0.1, "geometric")


@pytest.fixture(scope="session")
def pert_shear():
    return make_perturbed_family(20, 0.1, "geometric", 0.1)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
