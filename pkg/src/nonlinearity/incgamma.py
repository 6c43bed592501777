"""
Upper incomplete gamma function in log form.

F(u) = (1/p) Γ((1-q)/p, u^p) with a = (1-q)/p possibly <= 0, so the kernel
must handle any real a. The Legendre continued fraction does that for x > 0;
for small x the caller integrates the original integrand instead.
"""

import math
import sys

from src.errors import ConvergenceError, DomainError


TINY = sys.float_info.min / sys.float_info.epsilon
CF_RTOL = 1e-15
CF_MAX_ITER = 20000


def cf_threshold(a: float) -> float:
    """Smallest x at which the continued fraction is used."""
    return max(1.0, a + 1.0)


def log_upper_gamma_cf(a: float, x: float, rtol: float = CF_RTOL, max_iter: int = CF_MAX_ITER) -> float:
    """
    log Γ(a, x) by the Legendre continued fraction (modified Lentz).

    Γ(a, x) = e^{-x} x^a / (x+1-a - 1(1-a)/(x+3-a - 2(2-a)/(x+5-a - ...)))

    Args:
        a: Any real shape parameter
        x: Positive argument
        rtol: Relative convergence tolerance on the Lentz multiplier
        max_iter: Iteration cap

    Returns:
        Natural log of Γ(a, x)
    """
    if not x > 0.0:
        raise DomainError(f"continued fraction needs x > 0, got x={x}")

    b = x + 1.0 - a
    c = 1.0 / TINY
    d = 1.0 / b if abs(b) >= TINY else 1.0 / TINY
    h = d
    for i in range(1, max_iter + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < TINY:
            d = TINY
        c = b + an / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < rtol:
            break
    else:
        raise ConvergenceError(f"incomplete gamma CF did not converge (a={a}, x={x})")

    if h <= 0.0:
        raise ConvergenceError(f"incomplete gamma CF lost positivity (a={a}, x={x})")
    return -x + a * math.log(x) + math.log(h)
