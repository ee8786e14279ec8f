from pathlib import Path

import numpy as np
import pytest

from spatialgame import Arc, EnvironmentSpec, PlayerSpec, build_grid

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

# symmetric two-region parameters used across the suite
RHO, SIGMA, DELTA, W, GAMMA, A, ETA, THETA = 0.03, 0.5, 0.2, 1.0, 0.5, 1.6, 0.2, 0.4


def make_env(grid, sigma=SIGMA, delta=DELTA, v=0.0, eta=ETA, theta=THETA):
    n = grid.n_points
    return EnvironmentSpec(sigma, np.broadcast_to(v, n).astype(float),
                           np.broadcast_to(delta, n).astype(float), eta, theta)


def make_player(grid, arc, index=0, rho=RHO, gamma=GAMMA, w=W, A_=A):
    n = grid.n_points
    return PlayerSpec(Arc(*arc), rho, gamma, np.broadcast_to(w, n).astype(float),
                      np.broadcast_to(A_, n).astype(float), index=index)


def halves(grid, **kw):
    return [make_player(grid, (0.0, np.pi), 0, **kw), make_player(grid, (np.pi, 2 * np.pi), 1, **kw)]


@pytest.fixture
def grid():
    return build_grid(512)


@pytest.fixture
def env(grid):
    return make_env(grid)


@pytest.fixture
def players(grid):
    return halves(grid)


@pytest.fixture
def scenario_dir():
    return SCENARIOS


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
