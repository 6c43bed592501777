"""
Independent adaptive-quadrature evaluation of log F.

Shares no code path with the incomplete gamma kernel; the test suite and the
verify-fn command compare the two.
"""

import math

from scipy import integrate

from src.errors import DomainError
from .nonlinearity import Family, Nonlinearity


ORACLE_RTOL = 1e-13
ORACLE_LIMIT = 400


def _quad(fn, lo, hi):
    value, _ = integrate.quad(fn, lo, hi, epsabs=0.0, epsrel=ORACLE_RTOL, limit=ORACLE_LIMIT)
    return value


def _log_scaled_tail(p: float, q: float, u: float) -> float:
    """
    log ∫_u^∞ e^{-s^p} s^{-q} ds for u > 0.

    With s = u + σw, σ = 1/(p u^{p-1} + q/u), the integrand becomes
    e^{-u^p} u^{-q} σ E(w) where E(0) = 1 and E decays on an O(1) scale.
    """
    sigma = 1.0 / (p * u ** (p - 1.0) + q / u)
    up = u ** p

    def shape(w):
        log_ratio = math.log1p(sigma * w / u)
        return math.exp(-up * math.expm1(p * log_ratio) - q * log_ratio)

    body = _quad(shape, 0.0, 40.0) + _quad(shape, 40.0, math.inf)
    return -up - q * math.log(u) + math.log(sigma) + math.log(body)


def oracle_log_F(nl: Nonlinearity, u: float) -> float:
    """
    log F(u) by direct quadrature of e^{-s^p} s^{-q}.

    Small u with q >= 1 is split into geometric pieces [u, 2u, ..., 1] so each
    piece sees a bounded dynamic range of s^{-q}.
    """
    if nl.family is not Family.SUPER_EXPONENTIAL:
        raise DomainError("the quadrature oracle targets the super_exponential family")
    p, q = nl.p, nl.q
    if u < 0.0:
        raise DomainError(f"u must be nonnegative, got {u}")
    if u == 0.0:
        if q >= 1.0:
            return math.inf
        return math.log(_quad(lambda s: math.exp(-s ** p), 0.0, 1.0)
                        + _quad(lambda s: math.exp(-s ** p), 1.0, math.inf))
    if u >= 1.0:
        return _log_scaled_tail(p, q, u)

    if q == 0.0:
        pieces = [_quad(lambda s: math.exp(-s ** p), u, 1.0)]
    else:
        pieces = []
        lo = u
        while lo < 1.0:
            hi = min(2.0 * lo, 1.0)
            pieces.append(_quad(lambda s: math.exp(-s ** p) * s ** (-q), lo, hi))
            lo = hi
    head = math.fsum(pieces)
    return math.log(head + math.exp(_log_scaled_tail(p, q, 1.0)))
