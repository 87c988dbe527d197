import numpy as np
import pytest

from grushin import Domain, PurePower, assemble_grushin, build_grid, nehari_minimize

SQUARE = Domain.rectangle(-1.0, 1.0, -1.0, 1.0)

_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def square():
    return SQUARE


def make_problem(n, k=1.0, p=3.0, domain=SQUARE):
    grid = build_grid(domain, n, n)
    op = assemble_grushin(grid, k)
    return grid, op, PurePower(p, k)


@pytest.fixture(scope="session")
def nehari_runs():
    """Cached Nehari solves on the square, keyed by ``(p, n)``."""
    cache = {}

    def get(p, n):
        if (p, n) not in cache:
            grid, op, nl = make_problem(n, 1.0, p)
            cache[(p, n)] = (grid, op, nl, nehari_minimize(op, nl, seed=0))
        return cache[(p, n)]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_runtest_logreport(report):
    title = dict(report.user_properties).get("criterion")
    if title is not None and (report.when == "call" or report.failed):
        _ACCEPTANCE[title] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for title in sorted(_ACCEPTANCE, key=lambda t: int(t.split(".")[0])):
        mark = "PASS" if _ACCEPTANCE[title] == "passed" else "FAIL"
        terminalreporter.write_line(f"{mark}  {title}")
