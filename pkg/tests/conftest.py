import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.cli.config import build_config
from src.nonlinearity import Nonlinearity, coefficient_table
from src.selfsimilar import SelfSimilarFrame
from src.solver.grid import RadialGrid, Snapshot
from src.solver.initial import initial_phi, prepare_initial_data
from src.solver.run import run_to_blowup
from src.solver.stepper import PhiSolver


SHORT_RUN = {
    "nonlinearity": {"p": 2.0, "q": 0.0},
    "grid": {"n": 1, "R": 2.0, "J": 64},
    "init": {"profile": "parabola", "amplitude": 1.0, "supersolution_check": True},
    "solver": {"phi_stop": 30.0, "snapshot_delta_phi": 1.0},
    "analysis": {"y_resolution": 64},
    "ode": {"y0": 1.0, "stop_value": 10.0},
}


@pytest.fixture
def nl_p2q0():
    return Nonlinearity(2.0, 0.0)


@pytest.fixture
def nl_p2q1():
    return Nonlinearity(2.0, 1.0)


@pytest.fixture
def nl_exp():
    return Nonlinearity.exponential()


@pytest.fixture
def nl_power():
    return Nonlinearity.power(2.0)


@pytest.fixture
def grid64():
    return RadialGrid(1, 2.0, 64)


@pytest.fixture
def table_p2q0(nl_p2q0):
    return coefficient_table(nl_p2q0, 100.0)


@pytest.fixture(scope="session")
def short_config():
    return build_config(SHORT_RUN)


@pytest.fixture(scope="session")
def short_run(short_config):
    """p = 2, q = 0 on a coarse grid up to Φ(0) = 30; shared by the slow tests."""
    return run_to_blowup(short_config)


def constant_frames(count=6, s0=4.0, alpha=0.25, n=1, resolution=64, value=1.0):
    """Frames with v ≡ value at s = s0, s0 + 1, ..."""
    frames = []
    for k in range(count):
        s = s0 + k
        y = np.linspace(0.0, s ** alpha, resolution + 1)
        frames.append(SelfSimilarFrame(s=s, alpha=alpha, y=y, v=np.full_like(y, value), source_t=0.0, n=n,
                                       index=k))
    return frames


def advanced_state(J, t_end, n=1, extra_steps=0):
    """
    p = 2, q = 0 parabola data (A = 1, R = 2) advanced to t_end on a J-interval grid.

    Returns (grid, table, state at t_end, the extra_steps consecutive steps after it);
    each extra step carries log_dt_prev = log of its own dt.
    """
    nl = Nonlinearity(2.0, 0.0)
    grid = RadialGrid(n, 2.0, J)
    table = coefficient_table(nl, 60.0)
    solver = PhiSolver(nl, grid, table)
    u0, _ = prepare_initial_data(nl, grid, "parabola", 1.0, False)
    state = solver.advance_to(Snapshot(t=0.0, phi=initial_phi(nl, u0), umax=float(u0[0]), step_index=0), t_end)
    steps = []
    snap = state
    for _ in range(extra_steps):
        snap, dt = solver.step(snap)
        snap.log_dt_prev = math.log(dt)
        steps.append(snap)
    return grid, table, state, steps
