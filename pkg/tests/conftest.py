import sys

import numpy as np
import pytest

from skewflip.paths import SamplePath, TimeGrid, simulate_brownian
from skewflip.rng import Streams


def brownian(seed: int, i: int, grid: TimeGrid, role: str = "B") -> SamplePath:
    return simulate_brownian(grid, Streams(seed, i)(role), role=role)


def brownian_matrix(seed: int, n_paths: int, n_steps: int, horizon: float = 1.0) -> np.ndarray:
    """Vectorized Brownian ensemble (rows are paths) for statistical oracles."""
    rng = np.random.default_rng(seed)
    dt = horizon / n_steps
    out = np.zeros((n_paths, n_steps + 1))
    np.cumsum(rng.standard_normal((n_paths, n_steps)) * np.sqrt(dt), axis=1, out=out[:, 1:])
    return out


def path(values, horizon: float = 1.0, role: str = "X") -> SamplePath:
    values = np.asarray(values, dtype=float)
    return SamplePath(TimeGrid(horizon, values.size - 1), values, role)


@pytest.fixture
def grid1024():
    return TimeGrid(1.0, 1024)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[crit])
