"""
Gaussian-weighted energy of a frame on the ball B_{s^α} and the ledger of
the dissipation inequality

    ½∫ v_s²/v² ρ  <=  -dE/ds + H(s),

with E[v] = ½∫|∇v|²/v² ρ - ∫(v - log v) ρ and ρ = e^{-|y|²/4}.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.special import gamma

from src.errors import DomainError
from src.nonlinearity import CoefficientTable, Nonlinearity
from .frame import SelfSimilarFrame
from .residual import frame_coefficient, residual_veq, s_derivative, veq_norm, y_derivatives


logger = logging.getLogger(__name__)


RESIDUAL_SLACK_FACTOR = 3.0
MIN_RECORDS = 3


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n; 2 for n = 1 (two points)."""
    return 2.0 * math.pi ** (n / 2.0) / gamma(n / 2.0)


def gaussian_weight(y: np.ndarray) -> np.ndarray:
    return np.exp(-0.25 * y ** 2)


def radial_integral(y: np.ndarray, values: np.ndarray, n: int) -> float:
    """∫_{|y| <= y[-1]} g(|y|) dy by composite Simpson in the radius."""
    return float(sphere_area(n) * simpson(values * y ** (n - 1), x=y))


@dataclass
class EnergyRecord:
    """
    Attributes:
        s: Frame time
        E: dirichlet_part - potential_part
        dirichlet_part: ½∫|∇v|²/v² ρ
        potential_part: ∫(v - log v) ρ
        H: G_boundary + H_second
        H_second: ½∫(|∇v|/v)⁴ (f'F - 1)² ρ, nonnegative
        G_boundary: Flux and moving-ball terms on the sphere |y| = extent
        vs_integral: ½∫v_s²/v² ρ
        residual_norm: Weighted max norm of the v-equation residual
        truncated: The frame stops short of s^α
        extent: Radius actually integrated over
    """
    s: float
    E: float
    dirichlet_part: float
    potential_part: float
    H: float
    H_second: float
    G_boundary: float
    vs_integral: float
    residual_norm: float = 0.0
    truncated: bool = False
    extent: float = math.nan

    FIELDS = ("s", "E", "dirichlet_part", "potential_part", "H", "H_second",
              "G_boundary", "vs_integral", "residual_norm", "truncated", "extent")

    def row(self) -> List[float]:
        return [float(getattr(self, name)) for name in self.FIELDS]

    @classmethod
    def from_row(cls, row) -> "EnergyRecord":
        values = dict(zip(cls.FIELDS, (float(x) for x in row)))
        values["truncated"] = bool(values["truncated"])
        return cls(**values)


def energy(
    frame: SelfSimilarFrame,
    prev: SelfSimilarFrame,
    nxt: SelfSimilarFrame,
    nl: Nonlinearity,
    table: CoefficientTable,
) -> EnergyRecord:
    """
    Energy parts, H and the dissipation integral of one frame.

    v_s comes from the centered difference with the neighbouring frames.
    The boundary term is

        G = ∮ (v_s/v²) ∂_ν v ρ dS + (α/s) ∮ (½|∇v|²/v² - v + log v)(y·ν) ρ dS,

    which is what the moving ball adds when -dE/ds is formed, so that
    v ≡ 1 balances exactly.

    Raises:
        DomainError: frames not s-ordered
    """
    y, v = frame.y, frame.v
    rho = gaussian_weight(y)
    grad, _ = y_derivatives(y, v, frame.n)
    ratio_sq = (grad / v) ** 2
    log_v = np.log(v)

    dirichlet = 0.5 * radial_integral(y, ratio_sq * rho, frame.n)
    potential = radial_integral(y, (v - log_v) * rho, frame.n)

    coeff = frame_coefficient(frame, table)
    h_second = 0.5 * radial_integral(y, ratio_sq ** 2 * coeff ** 2 * rho, frame.n)

    v_s = s_derivative(prev, frame, nxt)
    vs_integral = 0.5 * radial_integral(y, (v_s / v) ** 2 * rho, frame.n)

    Y = frame.extent
    surface = sphere_area(frame.n) * Y ** (frame.n - 1) * rho[-1]
    flux = v_s[-1] / v[-1] ** 2 * grad[-1]
    density = 0.5 * ratio_sq[-1] - v[-1] + log_v[-1]
    g_boundary = surface * (flux + frame.alpha / frame.s * density * Y)

    residual = residual_veq(prev, frame, nxt, nl, table)
    return EnergyRecord(
        s=frame.s,
        E=dirichlet - potential,
        dirichlet_part=dirichlet,
        potential_part=potential,
        H=g_boundary + h_second,
        H_second=h_second,
        G_boundary=g_boundary,
        vs_integral=vs_integral,
        residual_norm=veq_norm(frame, residual),
        truncated=frame.truncated,
        extent=Y,
    )


def energy_series(
    frames: Sequence[SelfSimilarFrame],
    nl: Nonlinearity,
    table: CoefficientTable,
    threads: int = 1,
) -> List[EnergyRecord]:
    """EnergyRecords for every frame that has a neighbour on both sides, in order."""
    triples = list(zip(frames, frames[1:], frames[2:]))

    def work(triple):
        prev, frame, nxt = triple
        return energy(frame, prev, nxt, nl, table)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(work, triples))
    else:
        records = [work(t) for t in triples]
    logger.info(f"Energy evaluated on {len(records)} frames")
    return records


@dataclass
class LedgerRow:
    s_mid: float
    lhs: float
    rhs: float
    slack: float
    holds: bool

    FIELDS = ("s_mid", "lhs", "rhs", "slack", "holds")

    def row(self) -> List[float]:
        return [self.s_mid, self.lhs, self.rhs, self.slack, float(self.holds)]

    @classmethod
    def from_row(cls, row) -> "LedgerRow":
        s_mid, lhs, rhs, slack, holds = (float(x) for x in row)
        return cls(s_mid, lhs, rhs, slack, bool(holds))


def energy_inequality_check(records: Sequence[EnergyRecord]) -> List[LedgerRow]:
    """
    The dissipation inequality on every interval between consecutive records.

    lhs is the mean of vs_integral at the two ends, rhs is
    (E_k - E_{k+1})/Δs + mean H. The slack is three times the larger
    v-equation residual norm, plus half the change in G across the interval,
    which bounds the gap between the secant of E and the trapezoid of the
    boundary term while G is monotone on the interval.

    Raises:
        DomainError: fewer than three records
    """
    if len(records) < MIN_RECORDS:
        raise DomainError(f"the energy ledger needs at least {MIN_RECORDS} records, got {len(records)}")
    ledger = []
    for a, b in zip(records, records[1:]):
        ds = b.s - a.s
        lhs = 0.5 * (a.vs_integral + b.vs_integral)
        rhs = (a.E - b.E) / ds + 0.5 * (a.H + b.H)
        slack = (RESIDUAL_SLACK_FACTOR * max(a.residual_norm, b.residual_norm)
                 + 0.5 * abs(b.G_boundary - a.G_boundary))
        ledger.append(LedgerRow(0.5 * (a.s + b.s), lhs, rhs, slack, bool(lhs <= rhs + slack)))
    held = sum(r.holds for r in ledger)
    logger.info(f"Energy inequality holds on {held}/{len(ledger)} intervals")
    return ledger
