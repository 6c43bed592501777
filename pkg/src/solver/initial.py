"""
Initial data: radially nonincreasing profiles vanishing at the wall.
"""

import logging
from typing import Tuple

import numpy as np

from src.errors import ConfigError
from src.nonlinearity import Family, Nonlinearity, eval_log_F, log_f_array
from .equation import laplacian_radial
from .grid import RadialGrid


logger = logging.getLogger(__name__)


PROFILES = ("parabola", "cosine")
SUPERSOLUTION_SHRINK = 1.2
SUPERSOLUTION_MAX_TRIES = 50


def initial_profile(grid: RadialGrid, profile: str, amplitude: float) -> np.ndarray:
    """A (1 - (r/R)²)_+ or A cos(πr/(2R)); exactly 0 at r = R."""
    x = grid.r / grid.R
    if profile == "parabola":
        u0 = amplitude * np.clip(1.0 - x ** 2, 0.0, None)
    elif profile == "cosine":
        u0 = amplitude * np.cos(0.5 * np.pi * x)
    else:
        raise ConfigError([("init.profile", f"unknown profile {profile!r}, expected one of {PROFILES}")])
    u0[-1] = 0.0
    return u0


def supersolution_margin(nl: Nonlinearity, grid: RadialGrid, u0: np.ndarray) -> np.ndarray:
    """
    Δu0 + f(u0) at nodes 0..J-1.

    Nonnegative everywhere means u_t >= 0 for all time, which makes the
    blow-up of type I for q = 0.
    """
    lap = laplacian_radial(grid, u0)[:-1]
    with np.errstate(divide="ignore"):
        f = np.exp(log_f_array(nl, u0[:-1]))
    return lap + f


def prepare_initial_data(nl: Nonlinearity, grid: RadialGrid, profile: str, amplitude: float,
                         supersolution_check: bool) -> Tuple[np.ndarray, float]:
    """
    Build u0, shrinking the amplitude until Δu0 + f(u0) >= 0 when requested.

    Only q = 0 has f(0) > 0, so only there can the wall node pass; for q >= 1
    the check is skipped with a warning.

    Returns:
        (u0, amplitude actually used)
    """
    if not amplitude > 0.0:
        raise ConfigError([("init.amplitude", f"must be positive, got {amplitude}")])
    u0 = initial_profile(grid, profile, amplitude)
    if not supersolution_check:
        return u0, amplitude
    if nl.q != 0.0 or nl.family is Family.POWER:
        logger.warning(f"supersolution check skipped for {nl}: f(0) = 0 fails it at the wall")
        return u0, amplitude

    for attempt in range(SUPERSOLUTION_MAX_TRIES + 1):
        margin = supersolution_margin(nl, grid, u0)
        if np.all(margin >= 0.0):
            if attempt:
                logger.info(f"amplitude reduced to {amplitude:.6g} after {attempt} supersolution checks")
            return u0, amplitude
        amplitude /= SUPERSOLUTION_SHRINK
        u0 = initial_profile(grid, profile, amplitude)

    raise ConfigError([("init.amplitude",
                        f"no amplitude passed Δu0 + f(u0) >= 0 within {SUPERSOLUTION_MAX_TRIES} reductions")])


def initial_phi(nl: Nonlinearity, u0: np.ndarray) -> np.ndarray:
    """Φ0 = -log F(u0) node by node; u = 0 with infinite F(0) gives -inf."""
    return np.array([-eval_log_F(nl, float(u)).log_magnitude for u in u0])
