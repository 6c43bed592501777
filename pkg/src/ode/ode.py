"""
The spatially homogeneous problem y' = f(y), y(0) = y0.

Its solution is y(t) = F^{-1}(T - t) with T = F(y0). ode_integrate solves the
same problem with an embedded Runge-Kutta pair and is the independent
reference the PDE solver is tested against.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Tuple, Union

import numpy as np

from src.errors import DomainError, NumericalFailure, StepSizeUnderflow
from src.nonlinearity import LogValue, Nonlinearity, eval_F_inv_log, eval_log_F, eval_log_f


logger = logging.getLogger(__name__)


# Dormand-Prince 5(4)
DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
DP_E = tuple(b5 - b4 for b5, b4 in zip(DP_B5, DP_B4))

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 5.0
PI_ALPHA = 0.7 / 5
PI_BETA = 0.4 / 5
LIFETIME_CAP = 0.5
UNDERFLOW_RATIO = 1e-12
MAX_STEPS = 1_000_000


@dataclass
class OdeRun:
    """
    One integration of y' = f(y).

    samples hold (t, y, log_gap) with log_gap = log(T - t) advanced step by
    step; it stays meaningful after t itself stops changing in floating point.
    """
    nl: Nonlinearity
    y0: float
    T: float
    log_T: float
    samples: List[Tuple[float, float, float]] = field(default_factory=list)
    rejected: int = 0

    @property
    def steps(self) -> int:
        return max(0, len(self.samples) - 1)

    def table(self) -> np.ndarray:
        """Columns: t, y, F(y), T - t, log F(y), log(T - t)."""
        rows = []
        for t, y, log_gap in self.samples:
            log_F = eval_log_F(self.nl, y).log_magnitude
            rows.append((t, y, math.exp(log_F), math.exp(log_gap), log_F, log_gap))
        return np.array(rows, dtype=float)


def ode_log_blowup_time(nl: Nonlinearity, y0: float) -> LogValue:
    """log T for T = F(y0)."""
    if not y0 > 0.0:
        raise DomainError(f"y0 must be positive, got {y0}")
    return eval_log_F(nl, y0)


def ode_blowup_time(nl: Nonlinearity, y0: float) -> Union[float, LogValue]:
    """
    T = F(y0).

    Returns the float when it is representable and the LogValue otherwise.
    """
    log_T = ode_log_blowup_time(nl, y0)
    return log_T.value if log_T.representable else log_T


def ode_exact_from_gap(nl: Nonlinearity, log_gap: float) -> float:
    """y at the time where log(T - t) = log_gap."""
    return eval_F_inv_log(nl, log_gap)


def ode_exact(nl: Nonlinearity, y0: float, t: float) -> float:
    """
    y(t) = F^{-1}(T - t), with log(T - t) = log T + log1p(-t/T).

    Raises:
        DomainError: t < 0 or t >= T
    """
    log_T = ode_log_blowup_time(nl, y0).log_magnitude
    if t < 0.0:
        raise DomainError(f"t must be nonnegative, got {t}")
    if t == 0.0:
        return float(y0)
    ratio = math.exp(math.log(t) - log_T)
    if ratio >= 1.0:
        raise DomainError(f"t={t} is not before the blow-up time T={math.exp(log_T)}")
    return ode_exact_from_gap(nl, log_T + math.log1p(-ratio))


def _stages(nl: Nonlinearity, y: float, log_dt: float):
    """Stage increments dt * f(Y_i), formed in log space so dt may underflow."""
    ks = [math.exp(log_dt + eval_log_f(nl, y))]
    for i in range(1, 7):
        yi = y + sum(a * k for a, k in zip(DP_A[i], ks))
        if not yi >= 0.0:
            return None
        ks.append(math.exp(log_dt + eval_log_f(nl, yi)))
    return ks


def ode_integrate(nl: Nonlinearity, y0: float, stop_value: float, rel_tol: float = 1e-8) -> OdeRun:
    """
    Integrate y' = f(y) from y0 until y >= stop_value.

    Dormand-Prince 5(4) with PI step control. Steps are capped at half the
    remaining lifetime F(y), so the integration cannot jump past blow-up.

    Args:
        nl: The nonlinearity
        y0: Positive initial value
        stop_value: Value at which integration ends; must exceed y0
        rel_tol: Relative local error tolerance in [1e-12, 1e-3]

    Returns:
        OdeRun with every accepted step as a sample

    Raises:
        StepSizeUnderflow: dt fell below 1e-12 F(y) before stop_value
    """
    if not y0 > 0.0:
        raise DomainError(f"y0 must be positive, got {y0}")
    if not stop_value > y0:
        raise DomainError(f"stop_value={stop_value} must exceed y0={y0}")
    if not 1e-12 <= rel_tol <= 1e-3:
        raise DomainError(f"rel_tol={rel_tol} outside [1e-12, 1e-3]")

    log_T = eval_log_F(nl, y0).log_magnitude
    run = OdeRun(nl, float(y0), math.exp(log_T), log_T)

    t, y, log_gap = 0.0, float(y0), log_T
    run.samples.append((t, y, log_gap))
    log_dt = math.log(0.01) + log_T
    err_prev = 1.0
    clock_passed = False

    while y < stop_value:
        if run.steps + run.rejected > MAX_STEPS:
            raise NumericalFailure(f"ODE step budget exhausted at y={y}", {"t": t, "y": y, "log_gap": log_gap})

        log_cap = math.log(LIFETIME_CAP) + eval_log_F(nl, y).log_magnitude
        log_dt = min(log_dt, log_cap)
        if log_dt < math.log(UNDERFLOW_RATIO) + log_cap - math.log(LIFETIME_CAP):
            raise StepSizeUnderflow(
                f"ODE step size underflow at y={y}",
                {"t": t, "y": y, "log_gap": log_gap, "log_dt": log_dt, "steps": run.steps},
            )

        ks = _stages(nl, y, log_dt)
        if ks is None:
            log_dt += math.log(FAC_MIN)
            run.rejected += 1
            continue

        y_new = y + sum(b * k for b, k in zip(DP_B5, ks))
        err_abs = abs(sum(e * k for e, k in zip(DP_E, ks)))
        err = err_abs / (rel_tol * max(abs(y), abs(y_new)))

        if err <= 1.0 and math.isfinite(y_new):
            dt_over_gap = math.exp(log_dt - log_gap) if math.isfinite(log_gap) else math.inf
            t += math.exp(log_dt)
            if dt_over_gap < 1.0:
                log_gap += math.log1p(-dt_over_gap)
            else:
                if not clock_passed:
                    logger.warning(f"ODE clock passed T at y={y_new:.6g}; later gaps are not representable")
                clock_passed = True
                log_gap = math.nan
            y = y_new
            run.samples.append((t, y, log_gap))

            err = max(err, 1e-10)
            fac = SAFETY * err ** -PI_ALPHA * err_prev ** PI_BETA
            log_dt += math.log(min(FAC_MAX, max(FAC_MIN, fac)))
            err_prev = err
        else:
            fac = SAFETY * err ** -0.2 if math.isfinite(err) and err > 0.0 else FAC_MIN
            log_dt += math.log(max(FAC_MIN, fac))
            run.rejected += 1

    logger.info(f"ODE {nl}: y0={y0} -> {y:.6g} in {run.steps} steps ({run.rejected} rejected)")
    return run
