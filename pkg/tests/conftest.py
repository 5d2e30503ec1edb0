import numpy as np
import pytest

from degencontrol import assemble, build_grid, eigendecompose, make_coefficient


@pytest.fixture(scope="session")
def legendre():
    return make_coefficient("legendre")


@pytest.fixture(scope="session")
def legendre_2000(legendre):
    """Bare Legendre operator at production resolution, decomposed once."""
    grid = build_grid(2000)
    op = assemble(legendre, None, grid)
    return op, eigendecompose(op)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    def record(number, title, passed, detail=""):
        status = "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES.append((number, f"[{status}] criterion {number:>2}: {title} | {detail}"))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES, key=lambda item: item[0]):
        terminalreporter.write_line(line)
