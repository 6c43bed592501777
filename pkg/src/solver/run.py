"""
Drive one configured problem from t = 0 to Φ(0, t) >= Φ_stop.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

from src.errors import GlobalExistenceSuspected
from src.nonlinearity import coefficient_table, eval_F_inv_log
from .estimate import BlowupEstimate, estimate_T
from .grid import Snapshot
from .initial import initial_phi, prepare_initial_data
from .stepper import PhiSolver, StepController


logger = logging.getLogger(__name__)


TABLE_HEADROOM = 1.25
PROBE_LENGTH = 3


@dataclass
class RunResult:
    """
    Attributes:
        snapshots: Stored snapshots, first at t = 0, then one per Φ milestone
        estimate: Blow-up time estimate from the snapshots
        probes: Three consecutive step states just above Φ0(0) + probe_offset
        steps: Accepted steps
        amplitude: Initial amplitude actually used
        center_monotone: Φ(0, t) never decreased beyond the tolerance
    """
    snapshots: List[Snapshot]
    estimate: BlowupEstimate
    probes: List[Snapshot] = field(default_factory=list)
    steps: int = 0
    amplitude: float = math.nan
    center_monotone: bool = True


class _KahanClock:
    """Compensated running sum of step sizes."""

    def __init__(self):
        self.total = 0.0
        self._carry = 0.0

    def add(self, dt: float) -> float:
        y = dt - self._carry
        t = self.total + y
        self._carry = (t - self.total) - y
        self.total = t
        return t


def run_to_blowup(config, solver: Optional[PhiSolver] = None) -> RunResult:
    """
    Integrate until the centre value reaches Φ_stop, storing milestone snapshots.

    Snapshots are stored whenever Φ(0, t) crosses the next multiple of
    snapshot_delta_phi above its initial value. Each carries the log of the
    time since the previous one, summed step by step.

    Args:
        config: RunConfig
        solver: Optional prebuilt PhiSolver for the same problem

    Returns:
        RunResult with the blow-up estimate

    Raises:
        GlobalExistenceSuspected: t_max or max_steps reached first
        StepSizeUnderflow, NumericalFailure: from the stepper
    """
    nl, grid = config.nl(), config.radial_grid()
    scfg = config.solver
    if solver is None:
        table = coefficient_table(nl, TABLE_HEADROOM * scfg.phi_stop + 20.0)
        controller = StepController(safety=scfg.safety, diffusion_safety=scfg.diffusion_safety, tol=scfg.tol)
        solver = PhiSolver(nl, grid, table, controller)

    u0, amplitude = prepare_initial_data(nl, grid, config.init.profile, config.init.amplitude,
                                         config.init.supersolution_check)
    phi0 = initial_phi(nl, u0)
    snap = Snapshot(t=0.0, phi=phi0, umax=float(u0[0]), step_index=0)
    snapshots = [snap]
    probes: List[Snapshot] = []

    delta = scfg.snapshot_delta_phi
    next_level = phi0[0] + delta
    probe_level = phi0[0] + scfg.probe_offset
    clock = _KahanClock()
    since_mark = 0.0
    center_monotone = True
    slack = scfg.tol * max(1.0, abs(phi0[0]))

    logger.info(f"Run {config.run_id}: {nl}, n={grid.n}, R={grid.R}, J={grid.J}, A={amplitude:.6g}, "
                f"Φ0(0)={phi0[0]:.6g} -> Φ_stop={scfg.phi_stop}")

    while snap.phi_max < scfg.phi_stop:
        if snap.t >= scfg.t_max or snap.step_index >= scfg.max_steps:
            raise GlobalExistenceSuspected(
                f"no blow-up by t={snap.t:.6g} after {snap.step_index} steps (Φ(0)={snap.phi_max:.6g})",
                {"t": snap.t, "steps": snap.step_index, "phi0": snap.phi_max, "umax": snap.umax},
            )

        new, dt = solver.step(snap)
        new.t = clock.add(dt)
        since_mark += dt

        if new.phi_max < snap.phi_max - slack:
            center_monotone = False

        if len(probes) < PROBE_LENGTH and (probes or new.phi_max >= probe_level):
            probes.append(Snapshot(new.t, new.phi, new.umax, new.step_index, math.log(dt)))

        if new.phi_max >= next_level or new.phi_max >= scfg.phi_stop:
            new.log_dt_prev = math.log(since_mark)
            new.umax = eval_F_inv_log(nl, -new.phi_max)
            since_mark = 0.0
            snapshots.append(new)
            while next_level <= new.phi_max:
                next_level += delta
            logger.info(f"snapshot {len(snapshots) - 1}: Φ(0)={new.phi_max:.6f} u(0)={new.umax:.6f} "
                        f"step {new.step_index}")
        snap = new

    estimate = estimate_T(snapshots)
    logger.info(f"Run {config.run_id} finished: {snap.step_index} steps, {len(snapshots)} snapshots")
    return RunResult(snapshots, estimate, probes, snap.step_index, amplitude, center_monotone)
