"""
Verdicts over a finished run.

Every check returns a CheckResult carrying its statistic and the threshold
it was judged against, so a report can be re-judged without recomputation.
Thresholds are measurement policy for asymptotic statements that come with
no rates.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from src.errors import DomainError
from src.nonlinearity import CoefficientTable, Family, Nonlinearity, eval_F_inv_log
from src.nonlinearity.suites import SuiteRow, function_suite
from src.selfsimilar import (
    EnergyRecord,
    LedgerRow,
    SelfSimilarFrame,
    leibniz_check,
    residual_series,
    s_derivative,
    stationary_identity,
)
from src.selfsimilar.frame import phi_interpolator
from src.selfsimilar.residual import y_derivatives
from src.solver.equation import gradient_radial, laplacian_radial
from src.solver.grid import RadialGrid, Snapshot
from .stats import WINDOW, bounded_last_window, decreasing_trend, tail_decay_exponent


logger = logging.getLogger(__name__)


PROFILE_TOL = 0.1
PROFILE_NOISE_FLOOR = 1e-8
MIN_S_RANGE = 10.0
H_ALPHA_FACTOR = 0.5
QUASI_SCALING_TOL = 1e-2
LOCALIZATION_RADII = (0.25, 0.5, 0.75)
TYPE_I_BAND = math.log(2.0)
LOWER_BOUND_MARGIN = 1e-3
POSITIVITY_EPS = 0.1
H_DECAY_EXPONENT = -1.5
H_NOISE_FLOOR = 1e-12
LEDGER_FRACTION = 0.95
STATIONARY_NOISE_FLOOR = 1e-10
LEIBNIZ_TOLERANCES = {"constant": 1e-10, "gaussian": 1e-8, "poly_gaussian": 1e-6}
LEIBNIZ_S_SAMPLES = (1.5, 4.0, 16.0, 64.0)
DERIVATIVE_RADIUS = 0.5
BOUND_NOISE_FLOOR = 1e-8


class Verdict(Enum):
    PASS = "pass"
    FAIL = "fail"
    INFO = "info"


@dataclass
class CheckResult:
    name: str
    paper_anchor: str
    statistic: float
    threshold: float
    verdict: Verdict
    detail: Dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.verdict is Verdict.FAIL

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "paper_anchor": self.paper_anchor,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "verdict": self.verdict.value,
            "detail": self.detail,
        }


def _verdict(passed: bool) -> Verdict:
    return Verdict.PASS if passed else Verdict.FAIL


def _u_at(snapshot: Snapshot, grid: RadialGrid, table: CoefficientTable, r: float) -> float:
    interp, r_max = phi_interpolator(snapshot, grid)
    if r >= r_max:
        return 0.0
    return float(table.u_of(float(interp(r)))[0])


# Profile limit

def main_theorem_check(frames: Sequence[SelfSimilarFrame], C_compact: float) -> Tuple[np.ndarray, CheckResult]:
    """
    sup_{|y| <= C} |v(y, s) - 1| per frame.

    Frames whose extent does not reach C are left out of the series.
    """
    rows = []
    for frame in frames:
        if frame.extent < C_compact * (1.0 - 1e-12):
            continue
        inside = frame.y <= C_compact * (1.0 + 1e-12)
        rows.append((frame.s, float(np.max(np.abs(frame.v[inside] - 1.0)))))
    series = np.array(rows, dtype=float).reshape(-1, 2)
    anchor = "Theorem 1.1: v -> 1 uniformly on compact sets"

    if series.shape[0] < 2 or series[-1, 0] - series[0, 0] < MIN_S_RANGE:
        result = CheckResult("profile_limit", anchor, math.nan, PROFILE_TOL, Verdict.INFO,
                             {"reason": "under-resolved", "frames": int(series.shape[0])})
        return series, result

    window_max = float(np.max(series[-WINDOW:, 1]))
    trend_ok, slope = decreasing_trend(series[:, 0], series[:, 1], PROFILE_NOISE_FLOOR)
    passed = window_max <= PROFILE_TOL and trend_ok
    result = CheckResult("profile_limit", anchor, window_max, PROFILE_TOL, _verdict(passed), {
        "final_s": float(series[-1, 0]),
        "final_deviation": float(series[-1, 1]),
        "theil_sen_slope": slope,
        "C_compact": C_compact,
    })
    return series, result


# Solution along the curve |x| = s^α e^{-s/2}

def h_alpha_check(
    snapshots: Sequence[Snapshot],
    log_gaps: Sequence[float],
    alpha: float,
    grid: RadialGrid,
    nl: Nonlinearity,
    table: CoefficientTable,
) -> Tuple[np.ndarray, CheckResult]:
    """
    h_α / F^{-1}(T - t) over the last half of the s-window; the lower bound is ½.

    F^{-1}(T - t) is evaluated from log(T - t) directly.
    """
    anchor = "Lemma 3.2: h_α(t) >= ½F^-1(T-t)"
    s_all = -np.asarray(log_gaps, dtype=float)
    usable = np.nonzero(s_all >= 1.0)[0]
    if usable.size < 2:
        return np.empty((0, 2)), CheckResult("h_alpha_lower_bound", anchor, math.nan, H_ALPHA_FACTOR,
                                             Verdict.INFO, {"reason": "no snapshot with s >= 1"})
    s_mid = 0.5 * (s_all[usable[0]] + s_all[usable[-1]])

    rows, skipped = [], 0
    for k in usable:
        s = s_all[k]
        if s < s_mid:
            continue
        r = s ** alpha * math.exp(-0.5 * s)
        if r >= grid.R:
            skipped += 1
            continue
        try:
            ode_value = eval_F_inv_log(nl, float(log_gaps[k]))
        except DomainError:
            skipped += 1
            continue
        rows.append((s, _u_at(snapshots[k], grid, table, r) / ode_value))
    series = np.array(rows, dtype=float).reshape(-1, 2)
    if series.shape[0] == 0:
        return series, CheckResult("h_alpha_lower_bound", anchor, math.nan, H_ALPHA_FACTOR, Verdict.INFO,
                                   {"reason": "sample radius outside the grid", "skipped": skipped})

    worst = float(np.min(series[:, 1]))
    _, slope = decreasing_trend(series[:, 0], np.abs(series[:, 1] - 1.0))
    return series, CheckResult("h_alpha_lower_bound", anchor, worst, H_ALPHA_FACTOR,
                               _verdict(worst >= H_ALPHA_FACTOR),
                               {"final_ratio": float(series[-1, 1]), "ratio_deviation_slope": slope,
                                "skipped": skipped})


# Derivative bounds

def derivative_series(
    snapshots: Sequence[Snapshot],
    log_gaps: Sequence[float],
    grid: RadialGrid,
    table: CoefficientTable,
    radius_fraction: float = DERIVATIVE_RADIUS,
) -> np.ndarray:
    """
    Rows (s, √(T-t) sup|u_r|/(fF), (T-t) sup|u_rr|/(fF)) over r <= radius_fraction R.

    With u_r = fF Φ_r these are √(T-t) sup|Φ_r| and (T-t) sup|Φ_rr + c Φ_r²|.
    For n >= 2 the Hessian of a radial function also has the eigenvalue u_r/r,
    so the second column takes the larger of the two; at r = 0 both equal u_rr.
    """
    inner = grid.r <= radius_fraction * grid.R
    inner[-1] = False
    h = grid.h
    rows = []
    for snap, log_gap in zip(snapshots, log_gaps):
        phi = snap.phi[inner]
        work = snap.phi.copy()
        if work[-1] == -math.inf:
            work[-1] = work[-2]
        grad = gradient_radial(grid, work)[inner]
        second = np.empty_like(work)
        second[1:-1] = (work[2:] - 2.0 * work[1:-1] + work[:-2]) / h ** 2
        second[0] = 2.0 * (work[1] - work[0]) / h ** 2
        second = second[inner]
        coeff = table.coefficient(phi)
        g1 = float(np.max(np.abs(grad)))
        g2 = float(np.max(np.abs(second + coeff * grad ** 2)))
        if grid.n >= 2:
            r = grid.r[inner][1:]
            g2 = max(g2, float(np.max(np.abs(grad[1:] / r))))
        rows.append((
            -log_gap,
            math.exp(0.5 * log_gap + math.log(g1)) if g1 > 0.0 else 0.0,
            math.exp(log_gap + math.log(g2)) if g2 > 0.0 else 0.0,
        ))
    return np.array(rows, dtype=float).reshape(-1, 3)


def derivative_estimate_check(
    snapshots: Sequence[Snapshot],
    log_gaps: Sequence[float],
    grid: RadialGrid,
    table: CoefficientTable,
) -> Tuple[np.ndarray, List[CheckResult]]:
    """Both rescaled derivative series must stay within twice their median, or the noise floor, over the last window."""
    series = derivative_series(snapshots, log_gaps, grid, table)
    anchor = "Prop. 2.3: derivative estimate for the type I blow-up"
    results = []
    for col, name in ((1, "gradient_estimate"), (2, "hessian_estimate")):
        ok, tail_max, ref = bounded_last_window(series[:, col], noise_floor=BOUND_NOISE_FLOOR)
        results.append(CheckResult(name, anchor, tail_max, max(2.0 * ref, BOUND_NOISE_FLOOR), _verdict(ok),
                                   {"reported_constant": float(np.max(series[:, col]))}))
    return series, results


# Quasi-scaling

def _mirrored_spline(r: np.ndarray, phi: np.ndarray) -> CubicSpline:
    return CubicSpline(np.concatenate((-r[:0:-1], r)), np.concatenate((phi[:0:-1], phi)))


def quasiscaling_residual(
    probes: Sequence[Snapshot],
    grid: RadialGrid,
    nl: Nonlinearity,
    table: CoefficientTable,
    lam: float,
    boundary_layer: float = 0.05,
) -> float:
    """
    Weighted max residual of the equation satisfied by u_λ(x, t) = Φ(λx, λ²t) + 2 log λ:

        ∂_t u_λ - Δu_λ - e^{u_λ} - c |∇u_λ|² = 0,  c = f'F - 1 at u(λx, λ²t).

    The three probe states are consecutive steps; the residual sits at the
    middle one (λ²t = t_1). Weight: 1/(1 + e^{u_λ}).

    Raises:
        DomainError: λ outside (0, 1] or fewer than three probes
    """
    if not 0.0 < lam <= 1.0:
        raise DomainError(f"λ must lie in (0, 1], got {lam}")
    if len(probes) < 3:
        raise DomainError(f"the quasi-scaling residual needs three probe states, got {len(probes)}")
    p0, p1, p2 = probes[:3]

    sentinel = p1.phi[-1] == -math.inf
    last = grid.J - 1 if sentinel else grid.J
    r_nodes = grid.r[: last + 1]
    r_lim = float(r_nodes[-1])
    x = grid.r
    where = np.minimum(lam * x, r_lim)

    states = [_mirrored_spline(r_nodes, p.phi[: last + 1])(where) for p in (p0, p1, p2)]
    h1, h2 = math.exp(p1.log_dt_prev), math.exp(p2.log_dt_prev)
    d_t = (-h2 / (h1 * (h1 + h2)) * states[0]
           + (h2 - h1) / (h1 * h2) * states[1]
           + h1 / (h2 * (h1 + h2)) * states[2])

    log_lam2 = 2.0 * math.log(lam)
    u_lam = states[1] + log_lam2
    lap = laplacian_radial(grid, u_lam)
    grad = gradient_radial(grid, u_lam)
    coeff = table.coefficient(np.maximum(states[1], table.phi_floor))
    residual = lam ** 2 * d_t - lap - np.exp(u_lam) - coeff * grad ** 2

    valid = np.zeros(grid.J + 1, dtype=bool)
    valid[:-1] = lam * x[1:] <= r_lim * (1.0 + 1e-12)
    if sentinel:
        valid[grid.J - 1:] = False
    if nl.q >= 1.0:
        valid &= x <= (1.0 - boundary_layer) * grid.R
    weighted = np.abs(residual[valid]) / (1.0 + np.exp(u_lam[valid]))
    return float(np.max(weighted))


def quasiscaling_check(probes, grid, nl, table, lambdas, boundary_layer) -> List[CheckResult]:
    anchor = "quasi-scaling transformation: u_λ satisfies the exponential equation plus (f'F - 1)|∇u_λ|²"
    results = []
    for lam in lambdas:
        norm = quasiscaling_residual(probes, grid, nl, table, lam, boundary_layer)
        results.append(CheckResult(f"quasi_scaling_lambda_{lam:g}", anchor, norm, QUASI_SCALING_TOL,
                                   _verdict(norm <= QUASI_SCALING_TOL),
                                   {"lambda": lam, "boundary_layer": boundary_layer if nl.q >= 1.0 else 0.0}))
    return results


# Blow-up set

def localization_check(snapshots: Sequence[Snapshot], grid: RadialGrid, table: CoefficientTable) -> CheckResult:
    """u at r0 in {R/4, R/2, 3R/4} stays bounded while u(0, t) grows."""
    ratios = {}
    ok = True
    for frac in LOCALIZATION_RADII:
        r0 = frac * grid.R
        series = [_u_at(snap, grid, table, r0) for snap in snapshots]
        bounded, tail_max, ref = bounded_last_window(series, reference="first_half_max")
        ok &= bounded
        ratios[f"{frac:g}R"] = tail_max / ref if ref > 0.0 else math.inf
    growing = snapshots[-1].umax > snapshots[0].umax
    worst = max(ratios.values())
    return CheckResult("blowup_at_origin_only", "Lemma 2.6: blow-up only at the origin", worst, 2.0,
                       _verdict(ok and growing), {"ratios": ratios, "centre_growing": growing})


# Type-I and ODE comparisons

def type_i_witness(snapshots: Sequence[Snapshot], log_gaps: Sequence[float], nl: Nonlinearity) -> CheckResult:
    """log((T - t)/F(u(0, t))) stays within ±log 2 over the last half of the run."""
    log_ratio = np.asarray(log_gaps, dtype=float) + np.array([s.phi_max for s in snapshots])
    tail = log_ratio[len(log_ratio) // 2:]
    worst = float(np.max(np.abs(tail)))
    label = "verified (supersolution data)" if nl.q == 0.0 and nl.family is not Family.POWER else "measured"
    return CheckResult("type_i_witness", "type I rate: (T-t)/F(u(0,t)) bounded", worst, TYPE_I_BAND,
                       _verdict(worst <= TYPE_I_BAND), {"label": label, "final_log_ratio": float(log_ratio[-1])})


def ode_lower_bound_check(snapshots: Sequence[Snapshot], log_gaps: Sequence[float]) -> CheckResult:
    """u(0, t) >= F^{-1}(T - t), i.e. log(T - t) + Φ(0, t) >= 0, up to the estimate's margin."""
    log_ratio = np.asarray(log_gaps, dtype=float) + np.array([s.phi_max for s in snapshots])
    worst = float(np.min(log_ratio))
    return CheckResult("ode_lower_bound", "u(0,t) >= F^-1(T-t)", worst, -LOWER_BOUND_MARGIN,
                       _verdict(worst >= -LOWER_BOUND_MARGIN))


def centre_monotonicity_check(snapshots: Sequence[Snapshot], center_monotone: bool, nl: Nonlinearity) -> CheckResult:
    phi0 = np.array([s.phi_max for s in snapshots])
    step = float(np.min(np.diff(phi0))) if phi0.size > 1 else math.nan
    anchor = "u_t >= 0 from supersolution data"
    if nl.q != 0.0:
        return CheckResult("centre_monotone", anchor, step, 0.0, Verdict.INFO, {"reason": "q != 0"})
    return CheckResult("centre_monotone", anchor, step, 0.0, _verdict(center_monotone and step > 0.0),
                       {"every_step_monotone": center_monotone})


# Frame properties

def positivity_check(frames: Sequence[SelfSimilarFrame]) -> CheckResult:
    """Over the last window: v(0, s) >= 1 - ε and min_{|y| <= 1} v > 0."""
    tail = frames[-WINDOW:]
    centre = min(float(f.v[0]) for f in tail)
    inner = min(float(np.min(f.v[f.y <= 1.0])) for f in tail)
    return CheckResult("positivity_dichotomy", "Lemma 3.5: either v_∞ ≡ 0 or v_∞ > 0", centre,
                       1.0 - POSITIVITY_EPS, _verdict(centre >= 1.0 - POSITIVITY_EPS and inner > 0.0),
                       {"min_v_inner_ball": inner})


def lipschitz_check(frames: Sequence[SelfSimilarFrame]) -> CheckResult:
    per_frame = []
    for frame in frames:
        grad, _ = y_derivatives(frame.y, np.log(frame.v), frame.n)
        per_frame.append(float(np.max(np.abs(grad))))
    ok, tail_max, ref = bounded_last_window(per_frame, "first_half_max", noise_floor=BOUND_NOISE_FLOOR)
    threshold = max(2.0 * ref, BOUND_NOISE_FLOOR)
    return CheckResult("log_v_lipschitz", "-C|y| <= log v <= C", tail_max, threshold, _verdict(ok),
                       {"C_run": max(per_frame)})


def vs_bound_check(frames: Sequence[SelfSimilarFrame]) -> CheckResult:
    per_frame = []
    for prev, frame, nxt in zip(frames, frames[1:], frames[2:]):
        v_s = s_derivative(prev, frame, nxt)
        per_frame.append(float(np.max(np.abs(v_s) / (frame.v * (1.0 + frame.y)))))
    if not per_frame:
        return CheckResult("v_s_bound", "|v_s| <= C(1+|y|)", math.nan, math.nan, Verdict.INFO,
                           {"reason": "fewer than three frames"})
    ok, tail_max, ref = bounded_last_window(per_frame, "first_half_max", noise_floor=BOUND_NOISE_FLOOR)
    threshold = max(2.0 * ref, BOUND_NOISE_FLOOR)
    return CheckResult("v_s_bound", "|v_s| <= C(1+|y|)", tail_max, threshold, _verdict(ok),
                       {"C_prime": max(per_frame)})


# Energy

def h_integrability_check(records: Sequence[EnergyRecord]) -> CheckResult:
    """Cumulative ∫H ds converges: tail increments decay at least like s^-1.5."""
    anchor = "Lemma 3.4: H integrable"
    if len(records) < 4:
        return CheckResult("h_integrable", anchor, math.nan, H_DECAY_EXPONENT, Verdict.INFO,
                           {"reason": "fewer than four energy records"})
    s = np.array([r.s for r in records])
    H = np.array([r.H for r in records])
    cumulative = cumulative_trapezoid(H, s, initial=0.0)
    increments = np.diff(cumulative)
    exponent = tail_decay_exponent(s[1:], increments)
    tail = np.abs(increments[len(increments) // 2:])
    quiet = bool(np.max(tail) <= H_NOISE_FLOOR)
    passed = quiet or (math.isfinite(exponent) and exponent <= H_DECAY_EXPONENT)
    return CheckResult("h_integrable", anchor, exponent, H_DECAY_EXPONENT, _verdict(passed),
                       {"integral": float(cumulative[-1]), "tail_below_noise_floor": quiet})


def energy_ledger_check(ledger: Sequence[LedgerRow]) -> CheckResult:
    fraction = sum(r.holds for r in ledger) / len(ledger) if ledger else math.nan
    return CheckResult("energy_inequality", "Lemma 3.4: ½∫v_s²/v²ρ <= -dE/ds + H", fraction, LEDGER_FRACTION,
                       _verdict(bool(ledger) and fraction >= LEDGER_FRACTION), {"intervals": len(ledger)})


def stationary_trend_check(frames: Sequence[SelfSimilarFrame]) -> CheckResult:
    anchor = "Lemma 2.5: bounded positive stationary solutions are v ≡ 1 for n <= 2"
    if not frames or frames[0].n > 2:
        return CheckResult("stationary_identity", anchor, math.nan, STATIONARY_NOISE_FLOOR, Verdict.INFO,
                           {"reason": "n > 2"})
    s = [f.s for f in frames]
    combo = [stationary_identity(f)[2] for f in frames]
    ok, slope = decreasing_trend(s, combo, STATIONARY_NOISE_FLOOR)
    return CheckResult("stationary_identity", anchor, float(combo[-1]), STATIONARY_NOISE_FLOOR, _verdict(ok),
                       {"theil_sen_slope": slope})


def leibniz_checks(alpha: float, n: int) -> List[CheckResult]:
    results = []
    for name, tol in LEIBNIZ_TOLERANCES.items():
        deviation = leibniz_check(alpha, name, LEIBNIZ_S_SAMPLES, n)
        results.append(CheckResult(f"leibniz_{name}", "Lemma 3.1: differentiation over B_{s^α}", deviation, tol,
                                   _verdict(deviation <= tol)))
    return results


def veq_residual_check(frames: Sequence[SelfSimilarFrame], nl: Nonlinearity,
                       table: CoefficientTable) -> Tuple[np.ndarray, CheckResult]:
    """Reported only: the residual's order needs more than one resolution."""
    series = residual_series(frames, nl, table)
    stat = float(np.max(series[-WINDOW:, 1])) if series.size else math.nan
    return series, CheckResult("v_equation_residual", "Prop. 2.4: equation for v", stat, math.nan, Verdict.INFO,
                               {"max_over_run": float(np.max(series[:, 1])) if series.size else math.nan})


def suite_checks(nl: Nonlinearity, rows: Optional[Sequence[SuiteRow]] = None) -> List[CheckResult]:
    """The nonlinearity property suites as checks."""
    rows = function_suite(nl) if rows is None else rows
    return [
        CheckResult(f"fn_{row.name}", row.anchor, row.statistic, row.threshold, _verdict(row.passed),
                    {"worst_u": row.worst_u} if row.worst_u is not None else {})
        for row in rows
    ]
