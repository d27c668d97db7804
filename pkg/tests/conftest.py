import numpy as np
import pytest

from liebcavity import hierarchy, liouville, model

# lines appended by test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def default_params():
    return model.ModelParams()


@pytest.fixture(scope="session")
def default_lattice(default_params):
    return model.resolve(default_params)


@pytest.fixture(scope="session")
def linear_lattice():
    return model.resolve(model.ModelParams(u=0.0))


@pytest.fixture(scope="session")
def hierarchy_default(default_lattice):
    return hierarchy.solve(default_lattice, 4)


@pytest.fixture(scope="session")
def oracle_default(default_lattice):
    return liouville.oracle_steady_state(default_lattice, n_max=4, max_total=4)


@pytest.fixture
def rng():
    return np.random.default_rng(20260418)
