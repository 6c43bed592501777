"""
Spatial discretization of Φ_t = ΔΦ + e^Φ + c(Φ) |∂_r Φ|², c = f'F - 1.

This is the λ = 1 quasi-scaled form of u_t = Δu + f(u). For f = e^u the
coefficient c vanishes and the equation is exactly the exponential one.
"""

import logging
import math
from enum import Enum
from typing import Optional

import numpy as np

from src.errors import NumericalFailure
from src.nonlinearity import CoefficientTable, Nonlinearity, log_f_array
from src.nonlinearity.nonlinearity import LOG_MAX_FLOAT
from .grid import RadialGrid, Snapshot


logger = logging.getLogger(__name__)


class RhsMode(Enum):
    """FULL is the physical problem; the other two isolate one mechanism for testing."""
    FULL = "full"
    DIFFUSION = "diffusion"
    REACTION = "reaction"


def laplacian_radial(grid: RadialGrid, field: np.ndarray) -> np.ndarray:
    """
    Second-order radial Laplacian.

    Interior: (f_{j+1} - 2f_j + f_{j-1})/h² + ((n-1)/r_j)(f_{j+1} - f_{j-1})/(2h).
    Origin: 2n(f_1 - f_0)/h² by symmetry. The wall entry is 0 since the
    Dirichlet value is held fixed.
    """
    f = np.asarray(field, dtype=float)
    if f.shape != (grid.J + 1,):
        raise ValueError(f"field has shape {f.shape}, expected ({grid.J + 1},)")
    h = grid.h
    out = np.zeros_like(f)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h ** 2
    if grid.n > 1:
        out[1:-1] += (grid.n - 1) / grid.r[1:-1] * (f[2:] - f[:-2]) / (2.0 * h)
    out[0] = 2.0 * grid.n * (f[1] - f[0]) / h ** 2
    return out


def gradient_radial(grid: RadialGrid, field: np.ndarray) -> np.ndarray:
    """Centered ∂_r; zero at the origin by symmetry, one-sided at the wall."""
    f = np.asarray(field, dtype=float)
    out = np.zeros_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * grid.h)
    out[-1] = (f[-1] - f[-2]) / grid.h
    return out


def _wall_sentinel(phi: np.ndarray) -> bool:
    return phi[-1] == -math.inf


def rhs_phi(
    nl: Nonlinearity,
    grid: RadialGrid,
    snapshot,
    table: CoefficientTable,
    mode: RhsMode = RhsMode.FULL,
) -> np.ndarray:
    """
    Time derivative of Φ at every node.

    Args:
        nl: The nonlinearity
        grid: The radial grid
        snapshot: A Snapshot or a bare Φ array
        table: Coefficient table covering the Φ range of the snapshot
        mode: FULL, or DIFFUSION / REACTION for the isolated mechanisms

    Returns:
        Array of length J+1; the wall entry is 0 except in REACTION mode

    Raises:
        NumericalFailure: e^Φ overflows or an entry is not finite
    """
    phi = snapshot.phi if isinstance(snapshot, Snapshot) else np.asarray(snapshot, dtype=float)
    sentinel = _wall_sentinel(phi)
    active = phi[:-1] if sentinel else phi

    bad = np.nonzero(~np.isfinite(active))[0]
    if bad.size:
        j = int(bad[0])
        raise NumericalFailure(f"non-finite Φ at node {j}", {"node": j, "value": float(active[j])})

    if mode is RhsMode.REACTION:
        _check_overflow(active)
        out = np.zeros_like(phi)
        out[: active.size] = np.exp(active)
        return out

    work = phi.copy()
    if sentinel:
        # any finite value; the node next to the wall is replaced below
        work[-1] = work[-2]

    out = laplacian_radial(grid, work)
    if mode is RhsMode.FULL:
        _check_overflow(active)
        out[:-1] += np.exp(work[:-1])
        grad = gradient_radial(grid, work)[:-1]
        coeff = table.coefficient(work[:-1])
        out[:-1] += coeff * grad ** 2
        if sentinel:
            out[-2] = _wall_neighbour_rhs(nl, grid, phi, table)
    out[-1] = 0.0

    bad = np.nonzero(~np.isfinite(out))[0]
    if bad.size:
        j = int(bad[0])
        raise NumericalFailure(f"non-finite rhs at node {j}", {"node": j, "phi": float(phi[j])})
    return out


def _wall_neighbour_rhs(nl: Nonlinearity, grid: RadialGrid, phi: np.ndarray, table: CoefficientTable) -> float:
    """
    Φ_t at node J-1 when the wall value is u = 0 (Φ = -inf).

    Evaluated in u-space as e^Φ (Δu / f(u) + 1), which follows from
    Φ_t = u_t / (f F) and keeps the unbounded f'F near u = 0 out of the update.
    """
    J, h, n = grid.J, grid.h, grid.n
    u_near = table.u_of(phi[J - 2:J])
    u_prev, u_mid = float(u_near[0]), float(u_near[1])
    lap = (0.0 - 2.0 * u_mid + u_prev) / h ** 2
    lap += (n - 1) / grid.r[J - 1] * (0.0 - u_prev) / (2.0 * h)
    log_f = float(log_f_array(nl, np.array([u_mid]))[0])
    return math.exp(phi[J - 1] - log_f) * lap + math.exp(phi[J - 1])


def _check_overflow(phi: np.ndarray):
    top = float(np.max(phi))
    if top > LOG_MAX_FLOAT:
        j = int(np.argmax(phi))
        raise NumericalFailure(f"e^Φ overflows at node {j} (Φ={top:.6g})", {"node": j, "phi": top})


def coefficient_flux(grid: RadialGrid, phi: np.ndarray, table: CoefficientTable) -> Optional[float]:
    """max |c(Φ) ∂_r Φ| over the nodes updated in Φ-space; None when it vanishes."""
    stop = grid.J - 1 if _wall_sentinel(phi) else grid.J
    work = phi.copy()
    if stop < grid.J:
        work[-1] = work[-2]
    grad = gradient_radial(grid, work)[:stop]
    coeff = table.coefficient(work[:stop])
    top = float(np.max(np.abs(coeff * grad)))
    return top if top > 0.0 else None
