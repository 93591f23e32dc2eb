import math

import numpy as np
import pytest

from oscillakdv import Field, make_grid


@pytest.fixture
def grid64():
    return make_grid(64, 2 * math.pi)


@pytest.fixture
def gauss_grid():
    return make_grid(256, 64 * math.pi)


def random_band_limited(grid, seed, max_index=None):
    """Real field built from random modes with ``|index| <= max_index``."""
    rng = np.random.default_rng(seed)
    n = grid.n
    m = max_index if max_index is not None else n // 2 - 1
    c = np.zeros(n // 2 + 1, dtype=complex)
    c[1:m + 1] = rng.normal(size=m) + 1j * rng.normal(size=m)
    c[0] = rng.normal()
    return Field(grid, np.fft.irfft(c, n))


# acceptance criteria report lines, printed at the end of the session
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1][1:])):
            terminalreporter.write_line(line)
