import numpy as np
import pytest

from lorentz_tori import FourierMode, TorusModel

CONFIGS = __import__("pathlib").Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(scope="session")
def flat2():
    return TorusModel.flat(2)


@pytest.fixture(scope="session")
def single_mode():
    """f = 1 + 0.3 cos(2 pi t): depends on time only, so the separable oracle applies."""
    return TorusModel.build(2, 1.0, [FourierMode((1, 0), 0.3, 0.0)])


@pytest.fixture(scope="session")
def bumpy():
    return TorusModel.build(2, 1.0, [FourierMode((1, 0), 0.2, 0.0), FourierMode((0, 1), 0.1, 0.05),
                                     FourierMode((1, 1), 0.05, 0.02)])


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


# one verdict line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
