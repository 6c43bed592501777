"""
Explicit midpoint (RK2) time stepping for the Φ-equation.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.errors import NumericalFailure, StepSizeUnderflow
from src.nonlinearity import CoefficientTable, Nonlinearity
from .equation import RhsMode, coefficient_flux, rhs_phi
from .grid import RadialGrid, Snapshot


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepController:
    """
    Step size policy.

    dt = min(diffusion_safety h²/(2n), diffusion_safety h / max|c ∂_rΦ|,
    safety e^{-Φmax}); a step that breaks radial monotonicity by more than
    tol max(1, |Φ(0)|) is retried with dt halved.
    """
    safety: float = 0.02
    diffusion_safety: float = 0.5
    tol: float = 1e-9
    max_halvings: int = 40
    underflow_ratio: float = 1e-3
    enforce_monotone: bool = True


def is_monotone(phi: np.ndarray, tol: float) -> bool:
    """Φ nonincreasing in r up to tol max(1, |Φ(0)|)."""
    slack = tol * max(1.0, abs(float(phi[0])))
    with np.errstate(invalid="ignore"):
        rises = np.diff(phi)
    return not np.any(rises > slack)


class PhiSolver:
    """
    Advances Snapshots of one problem (nonlinearity, grid, table, controller).

    Holds no per-run state, so one instance may be shared by several runs.
    """

    def __init__(
        self,
        nl: Nonlinearity,
        grid: RadialGrid,
        table: CoefficientTable,
        controller: Optional[StepController] = None,
        mode: RhsMode = RhsMode.FULL,
    ):
        self.nl = nl
        self.grid = grid
        self.table = table
        self.controller = controller or StepController()
        self.mode = mode

    def rhs(self, phi: np.ndarray) -> np.ndarray:
        return rhs_phi(self.nl, self.grid, phi, self.table, self.mode)

    def stable_dt(self, phi: np.ndarray) -> float:
        ctl, grid = self.controller, self.grid
        limits = []
        if self.mode is not RhsMode.REACTION:
            limits.append(ctl.diffusion_safety * grid.h ** 2 / (2.0 * grid.n))
        if self.mode is RhsMode.FULL:
            flux = coefficient_flux(grid, phi, self.table)
            if flux is not None:
                limits.append(ctl.diffusion_safety * grid.h / flux)
        if self.mode is not RhsMode.DIFFUSION:
            limits.append(ctl.safety * math.exp(-float(np.max(phi))))
        return min(limits)

    def _rk2(self, phi: np.ndarray, dt: float) -> np.ndarray:
        k1 = self.rhs(phi)
        k2 = self.rhs(phi + 0.5 * dt * k1)
        return phi + dt * k2

    def step(self, snapshot: Snapshot, dt_max: Optional[float] = None) -> Tuple[Snapshot, float]:
        """
        One accepted midpoint step.

        Args:
            snapshot: Current state
            dt_max: Optional cap on dt (used to land on a target time)

        Returns:
            (new snapshot, dt taken); umax of the new snapshot comes from the
            coefficient table

        Raises:
            StepSizeUnderflow: halving pushed dt below underflow_ratio times
                the step it started from
            NumericalFailure: monotonicity still broken after max_halvings
        """
        ctl = self.controller
        phi = snapshot.phi
        dt = self.stable_dt(phi)
        if dt_max is not None:
            dt = min(dt, dt_max)
        floor = ctl.underflow_ratio * dt

        for halving in range(ctl.max_halvings + 1):
            if dt < floor:
                raise StepSizeUnderflow(
                    f"dt={dt:.3e} below floor {floor:.3e} at step {snapshot.step_index}",
                    {"t": snapshot.t, "step_index": snapshot.step_index, "dt": dt,
                     "phi0": float(phi[0]), "halvings": halving},
                )
            new_phi = self._rk2(phi, dt)
            if not ctl.enforce_monotone or is_monotone(new_phi, ctl.tol):
                break
            logger.debug(f"monotonicity lost at step {snapshot.step_index}, halving dt={dt:.3e}")
            dt *= 0.5
        else:
            raise NumericalFailure(
                f"radial monotonicity lost after {ctl.max_halvings} halvings",
                {"t": snapshot.t, "step_index": snapshot.step_index, "phi0": float(phi[0])},
            )

        umax = float(self.table.u_of(new_phi[:1])[0])
        return Snapshot(t=snapshot.t + dt, phi=new_phi, umax=umax, step_index=snapshot.step_index + 1), dt

    def advance_to(self, snapshot: Snapshot, t_end: float) -> Snapshot:
        """Step until t_end, shortening the last step to land on it."""
        while snapshot.t < t_end:
            remaining = t_end - snapshot.t
            snapshot, _ = self.step(snapshot, dt_max=remaining)
            if t_end - snapshot.t <= 1e-14 * max(1.0, t_end):
                snapshot.t = t_end
        return snapshot
