"""
Blow-up time from the snapshot sequence.

Since (T - t)/F(u(0, t)) -> 1, each snapshot k gives T_k = t_k + F(u(0, t_k)).
The sequence is formed relative to the last snapshot K, where it reads
G_k = T_k - t_K = e^{-Φ0_k} - (t_K - t_k), and scaled by e^{Φ0_K} so every
term is O(1). t_K - t_k is a suffix sum of the stored per-snapshot intervals,
never a difference of absolute times.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from src.errors import DomainError
from .grid import Snapshot


logger = logging.getLogger(__name__)


MIN_SNAPSHOTS = 5
WINDOW = 5


@dataclass
class BlowupEstimate:
    """
    Attributes:
        T_est: Estimated blow-up time (saturates like t near blow-up)
        log_gap_last: log(T_est - t) at the last snapshot
        method: "aitken" or "last_value"
        uncertainty: Spread of the extrapolants, in time units
        relative_uncertainty: uncertainty / (T_est - t_first)
        non_monotone: The normalized T_k sequence was not monotone beyond the spread
        log_gaps: log(T_est - t_k) for every snapshot, compensated
        extrapolants: Normalized Aitken values (gap at K in units of e^{-Φ0_K})
    """
    T_est: float
    log_gap_last: float
    method: str
    uncertainty: float
    relative_uncertainty: float
    non_monotone: bool = False
    log_gaps: List[float] = field(default_factory=list)
    extrapolants: List[float] = field(default_factory=list)

    def s_values(self) -> np.ndarray:
        """s_k = -log(T_est - t_k)."""
        return -np.asarray(self.log_gaps, dtype=float)


def log_suffix_sums(log_intervals: Sequence[float]) -> np.ndarray:
    """
    log D_k with D_k = sum of intervals k+1..K; D_K = 0 gives -inf.

    log_intervals[k] is the log of t_k - t_{k-1}; entry 0 is ignored.
    """
    K = len(log_intervals) - 1
    out = np.full(K + 1, -math.inf)
    for k in range(K - 1, -1, -1):
        out[k] = np.logaddexp(out[k + 1], log_intervals[k + 1])
    return out


def aitken(seq: np.ndarray) -> np.ndarray:
    """Aitken Δ² extrapolants of consecutive triples; nan where Δ² vanishes."""
    x0, x1, x2 = seq[:-2], seq[1:-1], seq[2:]
    d2 = x2 - 2.0 * x1 + x0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = x2 - (x2 - x1) ** 2 / d2
    out[d2 == 0.0] = np.nan
    return out


def estimate_T(snapshots: Sequence[Snapshot]) -> BlowupEstimate:
    """
    Extrapolate T from the last snapshots.

    Aitken Δ² over the last five normalized T_k gives three extrapolants; the
    last one is the estimate and their spread the uncertainty. When Δ² is
    degenerate or an extrapolant is not a positive gap, the last value is used.

    Raises:
        DomainError: fewer than five snapshots, or u(0, t) not increasing
    """
    if len(snapshots) < MIN_SNAPSHOTS:
        raise DomainError(f"estimate_T needs at least {MIN_SNAPSHOTS} snapshots, got {len(snapshots)}")
    phi0 = np.array([s.phi_max for s in snapshots])
    if np.any(np.diff(phi0) <= 0.0):
        raise DomainError("estimate_T needs snapshots with increasing u(0, t)")

    log_D = log_suffix_sums([s.log_dt_prev for s in snapshots])
    phi_K = phi0[-1]

    tail = slice(len(snapshots) - WINDOW, None)
    normalized = np.exp(phi_K - phi0[tail]) - np.exp(log_D[tail] + phi_K)

    extrapolants = aitken(normalized)
    usable = extrapolants[np.isfinite(extrapolants) & (extrapolants > 0.0)]
    if usable.size == len(extrapolants):
        method = "aitken"
        gap_hat = float(extrapolants[-1])
        spread = float(np.max(extrapolants) - np.min(extrapolants))
    else:
        method = "last_value"
        gap_hat = float(normalized[-1])
        spread = float(np.ptp(normalized[-3:]))
        if spread > 0.0:
            logger.warning("Aitken extrapolation degenerate; using the last T_k")

    steps = np.diff(normalized)
    non_monotone = bool(np.any(steps > spread) and np.any(steps < -spread))
    if non_monotone:
        logger.warning("T_k sequence is not monotone beyond its spread")

    log_gap_last = -phi_K + math.log(gap_hat)
    t_first, t_last = snapshots[0].t, snapshots[-1].t
    T_est = t_last + math.exp(log_gap_last)
    uncertainty = spread * math.exp(-phi_K)
    log_gaps = np.logaddexp(log_D, log_gap_last)

    estimate = BlowupEstimate(
        T_est=T_est,
        log_gap_last=log_gap_last,
        method=method,
        uncertainty=uncertainty,
        relative_uncertainty=uncertainty / (T_est - t_first) if T_est > t_first else math.inf,
        non_monotone=non_monotone,
        log_gaps=log_gaps.tolist(),
        extrapolants=[float(x) for x in extrapolants],
    )
    logger.info(f"T_est={T_est:.15g} ({method}), log gap at last snapshot {log_gap_last:.6g}")
    return estimate
