"""
Robust trend and boundedness tests on short series.
"""

import math
from typing import Sequence, Tuple

import numpy as np
from scipy.stats import theilslopes


WINDOW = 10
BOUND_FACTOR = 2.0


def theil_sen_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Median-of-pairwise-slopes fit; nan with fewer than two points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        return math.nan
    return float(theilslopes(y, x)[0])


def decreasing_trend(x: Sequence[float], y: Sequence[float], noise_floor: float = 0.0,
                     window: int = WINDOW) -> Tuple[bool, float]:
    """
    (passed, slope) over the last window points.

    Passes on a negative slope, or when every value in the window is at or
    below the noise floor.
    """
    xs, ys = np.asarray(x, dtype=float)[-window:], np.asarray(y, dtype=float)[-window:]
    slope = theil_sen_slope(xs, ys)
    if ys.size and float(np.max(np.abs(ys))) <= noise_floor:
        return True, slope
    return bool(slope < 0.0), slope


def bounded_last_window(series: Sequence[float], reference: str = "median",
                        window: int = WINDOW, factor: float = BOUND_FACTOR,
                        noise_floor: float = 0.0) -> Tuple[bool, float, float]:
    """
    (passed, last-window max, reference value).

    reference is "median" (median of the full series) or "first_half_max"
    (largest value in the first half). Passes when the last-window max is at
    most factor times the reference, or at most the noise floor.
    """
    values = np.asarray(series, dtype=float)
    if values.size == 0:
        return False, math.nan, math.nan
    tail_max = float(np.max(values[-window:]))
    if reference == "median":
        ref = float(np.median(values))
    elif reference == "first_half_max":
        ref = float(np.max(values[: max(1, values.size // 2)]))
    else:
        raise ValueError(f"unknown reference {reference!r}")
    return bool(tail_max <= max(factor * ref, noise_floor)), tail_max, ref


def tail_decay_exponent(s: Sequence[float], increments: Sequence[float]) -> float:
    """Theil–Sen slope of log|increment| against log s over the second half."""
    s = np.asarray(s, dtype=float)
    inc = np.abs(np.asarray(increments, dtype=float))
    half = s.size // 2
    s, inc = s[half:], inc[half:]
    keep = inc > 0.0
    if np.count_nonzero(keep) < 2:
        return math.nan
    return theil_sen_slope(np.log(s[keep]), np.log(inc[keep]))
