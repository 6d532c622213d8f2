import numpy as np
import pytest

from kinred.grid import make_phase_grid
from kinred.samples import random_distribution


@pytest.fixture
def grid1():
    return make_phase_grid(1, 2 * np.pi, 64, 12.0, 128)


@pytest.fixture
def grid2():
    return make_phase_grid(2, 2 * np.pi, 16, 8.0, 32)


def random_f(grid, seed, **kw):
    """Seeded smooth positive f on ``grid``."""
    rng = np.random.default_rng(seed)
    return random_distribution(rng, n=grid.n, Lq=grid.Lq, **kw)(grid)


# one line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def record(criterion: int, ok: bool, detail: str) -> bool:
    ACCEPTANCE[criterion] = (bool(ok), detail)
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}")
