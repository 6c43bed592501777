"""
Property suites for F, F^{-1} and f'F on one nonlinearity.

Each suite returns a list of SuiteRow; a row records the worst sample it saw
so a failure can be traced to a concrete u.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .nonlinearity import (
    Family,
    Nonlinearity,
    asymptote_F_inv,
    eval_F_inv_log,
    eval_log_F,
    eval_log_f,
    fprimeF,
    one_minus_fprimeF,
    threshold_l,
)
from .oracle import oracle_log_F


logger = logging.getLogger(__name__)


ROUND_TRIP_TOL = 1e-10
FPRIMEF_TOL = 1e-9
REMAINDER_BOUND = 10.0
ASYMPTOTE_TOL = 0.05
ORACLE_TOL = 1e-10
DERIVATIVE_TOL = 1e-6
CLOSED_FORM_TOL = 1e-12


@dataclass
class SuiteRow:
    name: str
    anchor: str
    statistic: float
    threshold: float
    passed: bool
    worst_u: Optional[float] = None
    detail: dict = field(default_factory=dict)


def _worst(values: np.ndarray, u: np.ndarray):
    i = int(np.argmax(values))
    return float(values[i]), float(u[i])


def round_trip_row(nl: Nonlinearity, u: np.ndarray) -> SuiteRow:
    err = np.array([
        abs(eval_F_inv_log(nl, eval_log_F(nl, ui).log_magnitude) - ui) / max(1.0, ui) for ui in u
    ])
    stat, at = _worst(err, u)
    return SuiteRow("round_trip", "F^-1 definition", stat, ROUND_TRIP_TOL, stat <= ROUND_TRIP_TOL, at)


def monotonicity_row(nl: Nonlinearity, u: np.ndarray) -> SuiteRow:
    log_F = np.array([eval_log_F(nl, ui).log_magnitude for ui in u])
    steps = np.diff(log_F)
    stat, at = _worst(steps, u[1:])
    return SuiteRow("log_F_decreasing", "F definition", stat, 0.0, stat < 0.0, at)


def derivative_row(nl: Nonlinearity, u: np.ndarray) -> SuiteRow:
    """Centered differences of log F against -1/(fF)."""
    err = []
    for ui in u:
        h = 1e-5 * max(1.0, ui)
        fd = (eval_log_F(nl, ui + h).log_magnitude - eval_log_F(nl, ui - h).log_magnitude) / (2.0 * h)
        exact = -math.exp(-eval_log_f(nl, ui) - eval_log_F(nl, ui).log_magnitude)
        err.append(abs(fd - exact) / abs(exact))
    stat, at = _worst(np.array(err), u)
    return SuiteRow("log_F_derivative", "F' = -1/f", stat, DERIVATIVE_TOL, stat <= DERIVATIVE_TOL, at)


def lemma_2_1_suite(nl: Nonlinearity, samples: int = 200) -> List[SuiteRow]:
    """f'F <= 1 beyond l and the (1 - f'F)(p u^p + q) bound on [l, 50]."""
    l = threshold_l(nl)
    u = np.linspace(max(l, 1e-6), 50.0, samples)

    excess = np.array([fprimeF(nl, ui) - 1.0 for ui in u])
    stat, at = _worst(excess, u)
    rows = [SuiteRow("fprimeF_le_one", "Lemma 2.1", stat, FPRIMEF_TOL, stat <= FPRIMEF_TOL, at,
                     {"l": l})]

    scaled = np.array([one_minus_fprimeF(nl, ui) * (nl.p * ui ** nl.p + nl.q) for ui in u])
    stat, at = _worst(scaled, u)
    tail = scaled[-20:]
    rows.append(SuiteRow(
        "remainder_bound", "Lemma 2.1 (estf'F)", stat, REMAINDER_BOUND, stat <= REMAINDER_BOUND, at,
        {"measured_C": stat, "tail_min": float(tail.min()), "tail_max": float(tail.max())},
    ))
    return rows


def lemma_2_2_suite(nl: Nonlinearity) -> List[SuiteRow]:
    """F^{-1}(y) / (-log y)^{1/p} -> 1 as y -> 0."""
    S = 184.0
    ratio = eval_F_inv_log(nl, -S) / asymptote_F_inv(nl, -S)
    rows = [SuiteRow("asymptote_ratio", "Lemma 2.2", abs(ratio - 1.0), ASYMPTOTE_TOL,
                     abs(ratio - 1.0) <= ASYMPTOTE_TOL, None, {"S": S, "ratio": ratio})]

    levels = np.array([184.0, 1e3, 1e4, 1e5])
    gaps = np.array([abs(eval_F_inv_log(nl, -x) / asymptote_F_inv(nl, -x) - 1.0) for x in levels])
    shrinking = bool(np.all(np.diff(gaps) <= 0.0))
    rows.append(SuiteRow("asymptote_trend", "Lemma 2.2", float(gaps[-1]), float(gaps[0]), shrinking,
                         None, {"levels": levels.tolist(), "gaps": gaps.tolist()}))
    return rows


def oracle_row(nl: Nonlinearity, u: np.ndarray) -> SuiteRow:
    err = np.array([
        abs(math.expm1(eval_log_F(nl, ui).log_magnitude - oracle_log_F(nl, ui))) for ui in u
    ])
    stat, at = _worst(err, u)
    return SuiteRow("oracle_agreement", "F definition", stat, ORACLE_TOL, stat <= ORACLE_TOL, at)


def closed_form_rows(nl: Nonlinearity, u: np.ndarray) -> List[SuiteRow]:
    """Reference families against their analytic F and F^{-1}."""
    if nl.family is Family.PURE_EXPONENTIAL:
        exact_log_F = -u
    else:
        exact_log_F = (1.0 - nl.p) * np.log(u) - math.log(nl.p - 1.0)
    log_F = np.array([eval_log_F(nl, ui).log_magnitude for ui in u])
    err_F = np.abs(np.expm1(log_F - exact_log_F))
    err_inv = np.array([abs(eval_F_inv_log(nl, y) - ui) / max(1.0, ui) for y, ui in zip(exact_log_F, u)])
    stat_F, at_F = _worst(err_F, u)
    stat_inv, at_inv = _worst(err_inv, u)
    return [
        SuiteRow("closed_form_F", "F definition", stat_F, CLOSED_FORM_TOL, stat_F <= CLOSED_FORM_TOL, at_F),
        SuiteRow("closed_form_F_inv", "F^-1 definition", stat_inv, CLOSED_FORM_TOL,
                 stat_inv <= CLOSED_FORM_TOL, at_inv),
    ]


def function_suite(nl: Nonlinearity) -> List[SuiteRow]:
    """All property rows applicable to nl's family."""
    u_trip = np.linspace(0.5, 50.0, 200)
    if nl.family is not Family.SUPER_EXPONENTIAL:
        rows = closed_form_rows(nl, u_trip)
        rows.append(round_trip_row(nl, u_trip))
    else:
        rows = [round_trip_row(nl, u_trip), monotonicity_row(nl, u_trip),
                derivative_row(nl, np.linspace(0.5, 5.0, 50))]
        rows.extend(lemma_2_1_suite(nl))
        rows.extend(lemma_2_2_suite(nl))
        u_oracle = np.linspace(0.0, 5.0, 26)
        if nl.q >= 1.0:
            u_oracle = u_oracle[1:]
        rows.append(oracle_row(nl, u_oracle))

    for row in rows:
        logger.info(f"{row.name}: {row.statistic:.3e} vs {row.threshold:.3e} -> {'pass' if row.passed else 'fail'}")
    return rows


def function_table(nl: Nonlinearity, u: np.ndarray) -> np.ndarray:
    """
    Columns: u, log F, F, F^-1(F(u)), f'F, (1 - f'F)(p u^p + q).

    Rows at u = 0 with q >= 1 carry inf/nan where the quantity is undefined.
    """
    rows = []
    for ui in u:
        log_F = eval_log_F(nl, ui).log_magnitude
        if math.isfinite(log_F):
            back = eval_F_inv_log(nl, log_F)
        else:
            back = 0.0
        if ui == 0.0 and nl.q >= 1.0:
            fpF, scaled = math.inf, math.nan
        else:
            fpF = fprimeF(nl, ui)
            scaled = one_minus_fprimeF(nl, ui) * (nl.p * ui ** nl.p + nl.q)
        rows.append((ui, log_F, math.exp(log_F) if log_F < 709.0 else math.inf, back, fpF, scaled))
    return np.array(rows, dtype=float)
