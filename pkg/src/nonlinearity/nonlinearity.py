"""
The nonlinearity f(u) = e^{u^p} u^q and its lifetime function F.

F(u) = ∫_u^∞ ds / f(s) is the remaining lifetime of the ODE y' = f(y) started
at u. For u of order 709^{1/p} and beyond F underflows, so every comparative
quantity (F, f, f'F) is evaluated in log space and only exponentiated when
the result is known to be representable.

Two reference families with closed forms live next to the main one:
f(u) = e^u (F = e^{-u}) and f(u) = u^p (F = u^{1-p}/(p-1)).
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from src.errors import ConvergenceError, DomainError
from .incgamma import cf_threshold, log_upper_gamma_cf


logger = logging.getLogger(__name__)


LOG_MAX_FLOAT = math.log(np.finfo(float).max)
QUAD_RTOL = 1e-12
QUAD_LIMIT = 200
NEWTON_MAX_ITER = 200


class Family(Enum):
    """Which closed form (if any) the nonlinearity has."""
    SUPER_EXPONENTIAL = "super_exponential"
    PURE_EXPONENTIAL = "pure_exponential_reference"
    POWER = "power_reference"


@dataclass(frozen=True)
class Nonlinearity:
    """
    The exponent pair (p, q) together with its family tag.

    Instances are immutable and hashable so derived constants can be cached
    per nonlinearity.
    """
    p: float
    q: float = 0.0
    family: Family = Family.SUPER_EXPONENTIAL

    def __post_init__(self):
        if not isinstance(self.family, Family):
            object.__setattr__(self, "family", Family(self.family))
        p, q = float(self.p), float(self.q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

        if self.family is Family.SUPER_EXPONENTIAL:
            if not p > 1.0:
                raise DomainError(f"super_exponential needs p > 1, got p={p}")
            if not (q == 0.0 or q >= 1.0):
                raise DomainError(f"super_exponential needs q in {{0}} ∪ [1, ∞), got q={q}")
        elif self.family is Family.PURE_EXPONENTIAL:
            if (p, q) != (1.0, 0.0):
                raise DomainError(f"pure_exponential_reference is (p, q) = (1, 0), got ({p}, {q})")
        elif self.family is Family.POWER:
            if not p > 1.0:
                raise DomainError(f"power_reference needs p > 1, got p={p}")
            if q != 0.0:
                raise DomainError("power_reference takes no q")

    @classmethod
    def exponential(cls) -> "Nonlinearity":
        return cls(1.0, 0.0, Family.PURE_EXPONENTIAL)

    @classmethod
    def power(cls, p: float) -> "Nonlinearity":
        return cls(p, 0.0, Family.POWER)

    @property
    def a(self) -> float:
        """Shape parameter of the incomplete gamma reduction."""
        return (1.0 - self.q) / self.p

    @property
    def log_F0(self) -> float:
        """log F(0); +inf when the integrand is not integrable at 0."""
        return _log_F(self, 0.0)

    def __str__(self) -> str:
        if self.family is Family.SUPER_EXPONENTIAL:
            return f"e^(u^{self.p:g}) u^{self.q:g}"
        if self.family is Family.PURE_EXPONENTIAL:
            return "e^u"
        return f"u^{self.p:g}"


@dataclass(frozen=True)
class LogValue:
    """A positive quantity carried by its natural log."""
    log_magnitude: float

    @classmethod
    def from_value(cls, value: float) -> "LogValue":
        if value < 0.0:
            raise DomainError(f"LogValue needs a nonnegative value, got {value}")
        return cls(math.log(value) if value > 0.0 else -math.inf)

    @property
    def value(self) -> float:
        """The linear value; 0.0 or inf outside the float range."""
        if self.log_magnitude > LOG_MAX_FLOAT:
            return math.inf
        return math.exp(self.log_magnitude)

    @property
    def representable(self) -> bool:
        return math.isfinite(self.log_magnitude) and -745.0 < self.log_magnitude < LOG_MAX_FLOAT


def _check_u(u: float) -> float:
    u = float(u)
    if not u >= 0.0 or math.isnan(u):
        raise DomainError(f"u must be a nonnegative real, got {u}")
    return u


# ---------------------------------------------------------------- f and f'

def eval_log_f(nl: Nonlinearity, u: float) -> float:
    """log f(u); -inf when f(u) = 0."""
    u = _check_u(u)
    if nl.family is Family.PURE_EXPONENTIAL:
        return u
    if u == 0.0:
        if nl.family is Family.POWER or nl.q >= 1.0:
            return -math.inf
        return 0.0
    if nl.family is Family.POWER:
        return nl.p * math.log(u)
    return u ** nl.p + nl.q * math.log(u)


def eval_f(nl: Nonlinearity, u: float) -> float:
    """
    f(u) in linear form.

    Raises:
        DomainError: if f(u) overflows; use eval_log_f there
    """
    log_f = eval_log_f(nl, u)
    if log_f > LOG_MAX_FLOAT:
        raise DomainError(f"f({u}) overflows (log f = {log_f:.6g}); use eval_log_f")
    return math.exp(log_f)


def log_f_array(nl: Nonlinearity, u: np.ndarray) -> np.ndarray:
    """Vectorized log f; -inf where f(u) = 0."""
    u = np.asarray(u, dtype=float)
    if nl.family is Family.PURE_EXPONENTIAL:
        return u.copy()
    if nl.family is Family.POWER:
        return nl.p * np.log(u)
    if nl.q == 0.0:
        return u ** nl.p
    return u ** nl.p + nl.q * np.log(u)


def eval_log_f_prime(nl: Nonlinearity, u: float) -> float:
    """log f'(u) with f'(u) = (p u^{p-1} + q u^{-1}) e^{u^p} u^q."""
    u = _check_u(u)
    p, q = nl.p, nl.q
    if nl.family is Family.PURE_EXPONENTIAL:
        return u
    if nl.family is Family.POWER:
        return math.log(p) + (p - 1.0) * math.log(u) if u > 0.0 else -math.inf
    if u == 0.0:
        if q >= 1.0:
            raise DomainError("f'(0) is undefined for q >= 1 (the u^{-1} factor)")
        return -math.inf
    return math.log(p * u ** (p - 1.0) + q / u) + u ** p + q * math.log(u)


def eval_f_prime(nl: Nonlinearity, u: float) -> float:
    log_fp = eval_log_f_prime(nl, u)
    if log_fp > LOG_MAX_FLOAT:
        raise DomainError(f"f'({u}) overflows (log f' = {log_fp:.6g}); use eval_log_f_prime")
    return math.exp(log_fp)


# ---------------------------------------------------------------- F

def _head_integral(p: float, q: float, u: float, u_switch: float) -> float:
    """∫_u^{u_switch} e^{-s^p} s^{-q} ds for the region where the CF is slow."""
    if q == 0.0:
        value, _ = integrate.quad(
            lambda s: math.exp(-s ** p), u, u_switch,
            epsabs=0.0, epsrel=QUAD_RTOL, limit=QUAD_LIMIT,
        )
        return value
    # s = e^w removes the s^{-q} endpoint growth
    value, _ = integrate.quad(
        lambda w: math.exp(-math.exp(p * w) + (1.0 - q) * w),
        math.log(u), math.log(u_switch),
        epsabs=0.0, epsrel=QUAD_RTOL, limit=QUAD_LIMIT,
    )
    return value


def _log_F_super(p: float, q: float, u: float) -> float:
    a = (1.0 - q) / p
    x_switch = cf_threshold(a)
    x = u ** p
    if x >= x_switch:
        return log_upper_gamma_cf(a, x) - math.log(p)
    if u == 0.0 and q >= 1.0:
        return math.inf
    u_switch = x_switch ** (1.0 / p)
    tail = math.exp(log_upper_gamma_cf(a, x_switch) - math.log(p))
    return math.log(_head_integral(p, q, u, u_switch) + tail)


def _log_F(nl: Nonlinearity, u: float) -> float:
    if nl.family is Family.PURE_EXPONENTIAL:
        return -u
    if nl.family is Family.POWER:
        if u == 0.0:
            return math.inf
        return (1.0 - nl.p) * math.log(u) - math.log(nl.p - 1.0)
    return _log_F_super(nl.p, nl.q, u)


def eval_log_F(nl: Nonlinearity, u: float) -> LogValue:
    """
    log F(u) with F(u) = ∫_u^∞ e^{-s^p} s^{-q} ds = (1/p) Γ((1-q)/p, u^p).

    Args:
        nl: The nonlinearity
        u: Nonnegative argument; F(0) = +inf when q >= 1

    Returns:
        LogValue of F(u); stays finite (≈ -u^p) for large u
    """
    return LogValue(_log_F(nl, _check_u(u)))


def eval_F(nl: Nonlinearity, u: float) -> float:
    """F(u) in linear form; underflows to 0 for u^p beyond ~745."""
    return eval_log_F(nl, u).value


def _log_fF(nl: Nonlinearity, u: float, log_F: float) -> float:
    return eval_log_f(nl, u) + log_F


# ---------------------------------------------------------------- F^{-1}

def asymptote_F_inv(nl: Nonlinearity, log_y: float) -> float:
    """
    (-log y)^{1/p}, the leading behaviour of F^{-1}(y) as y -> 0+.

    Used as the Newton seed and as a diagnostic ratio.
    """
    if nl.family is Family.POWER:
        raise DomainError("the logarithmic asymptote does not apply to the power reference")
    if not log_y < 0.0:
        raise DomainError(f"asymptote needs log y < 0, got {log_y}")
    return (-log_y) ** (1.0 / nl.p)


def eval_F_inv_log(nl: Nonlinearity, log_y: float) -> float:
    """
    F^{-1}(y) from log y, so y may be far below the float range.

    Safeguarded Newton on log F (d/du log F = -1/(fF)) seeded by the
    logarithmic asymptote, with a bisection fallback whenever a Newton
    iterate leaves the current bracket.

    Raises:
        DomainError: log_y is not in the range of log F
        ConvergenceError: the iteration budget ran out
    """
    log_y = float(log_y)
    if math.isnan(log_y) or log_y == -math.inf:
        raise DomainError(f"log_y must be finite, got {log_y}")

    if nl.family is Family.PURE_EXPONENTIAL:
        if log_y > 0.0:
            raise DomainError(f"log_y={log_y} exceeds log F(0) = 0")
        return -log_y
    if nl.family is Family.POWER:
        if log_y == math.inf:
            raise DomainError("log_y must be finite for the power reference")
        return math.exp((log_y + math.log(nl.p - 1.0)) / (1.0 - nl.p))

    log_F0 = nl.log_F0
    if log_y > log_F0:
        raise DomainError(f"log_y={log_y} exceeds the upper bound log F(0)={log_F0}")
    if log_y == log_F0:
        return 0.0
    return _newton_F_inv(nl, log_y)


def _newton_F_inv(nl: Nonlinearity, target: float) -> float:
    def g(u):
        return _log_F(nl, u) - target

    seed = (-target) ** (1.0 / nl.p) if target < -1.0 else 1.0
    u, gu = seed, g(seed)

    # bracket [lo, hi] with g(lo) >= 0 >= g(hi)
    if gu > 0.0:
        lo, hi = u, 2.0 * u
        while g(hi) > 0.0:
            lo, hi = hi, 2.0 * hi
    else:
        hi = u
        if nl.q == 0.0:
            lo = 0.0
        else:
            lo = 0.5 * u
            for _ in range(2000):
                if g(lo) >= 0.0:
                    break
                hi, lo = lo, 0.5 * lo
            else:
                raise ConvergenceError(f"could not bracket F^-1 at log_y={target}")

    tol_g = 1e-13 * max(1.0, abs(target))
    for _ in range(NEWTON_MAX_ITER):
        if abs(gu) <= tol_g:
            return u
        log_fF = _log_fF(nl, u, gu + target)
        u_new = u + gu * math.exp(log_fF) if math.isfinite(log_fF) else math.nan
        if not lo < u_new < hi:
            u_new = 0.5 * (lo + hi)
        g_new = g(u_new)
        if g_new > 0.0:
            lo = u_new
        else:
            hi = u_new
        scale = u_new
        if abs(u_new - u) <= 1e-13 * scale or hi - lo <= 1e-13 * scale:
            return u_new
        u, gu = u_new, g_new

    raise ConvergenceError(f"F^-1 Newton did not converge at log_y={target}")


# ---------------------------------------------------------------- f'F

@lru_cache(maxsize=None)
def threshold_l(nl: Nonlinearity) -> float:
    """
    l(p, q) beyond which f'F <= 1.

    l = max{l0, (q/(p(p-1)))^{1/p}} where l0 is where
    s -> (p(p-1)s^p - q)/(p s^p + q)^2 starts to decrease. The sign of its
    derivative is that of (p+1)q - p(p-1)s^p; l0 is located on a grid and
    refined by brentq. For q = 0 the function decreases everywhere and l = 0.
    """
    if nl.family is not Family.SUPER_EXPONENTIAL:
        raise DomainError("threshold_l is defined for the super_exponential family")
    p, q = nl.p, nl.q

    def slope_sign(s):
        return (p + 1.0) * q - p * (p - 1.0) * np.asarray(s) ** p

    grid = np.linspace(1e-8, 50.0, 5001)
    increasing = np.nonzero(slope_sign(grid) > 0.0)[0]
    if increasing.size == 0:
        l0 = 0.0
    else:
        i = increasing[-1]
        l0 = optimize.brentq(lambda s: float(slope_sign(s)), grid[i], grid[i + 1], xtol=1e-8)
    return max(l0, (q / (p * (p - 1.0))) ** (1.0 / p))


def fprimeF(nl: Nonlinearity, u: float) -> float:
    """
    f'(u) F(u) computed as exp(log f' + log F).

    For q = 1 the value grows without bound as u -> 0; it is returned as is.
    """
    u = _check_u(u)
    if nl.family is Family.PURE_EXPONENTIAL:
        return 1.0
    if nl.family is Family.POWER:
        return nl.p / (nl.p - 1.0)
    if u == 0.0 and nl.q == 0.0:
        return 0.0
    return math.exp(eval_log_f_prime(nl, u) + _log_F(nl, u))


def _remainder_integral(p: float, q: float, u: float) -> float:
    """
    1 - f'F by the integration-by-parts remainder.

    1 - f'(u)F(u) = f'(u) ∫_u^∞ (p(p-1)s^p - q)/(p s^p + q)^2 e^{-s^p} s^{-q} ds.
    With s = u + σw and σ = 1/(p u^{p-1} + q/u) the prefactor f'(u)σ e^{-u^p}u^{-q}
    is exactly 1 and the integrand is O(1), so nothing overflows or cancels.
    """
    sigma = 1.0 / (p * u ** (p - 1.0) + q / u)
    up = u ** p

    def integrand(w):
        rel = sigma * w / u
        log_ratio = math.log1p(rel)
        growth = up * math.expm1(p * log_ratio)
        sp = (u + sigma * w) ** p
        weight = math.exp(-growth - q * log_ratio)
        return (p * (p - 1.0) * sp - q) / (p * sp + q) ** 2 * weight

    head, _ = integrate.quad(integrand, 0.0, 50.0, epsabs=0.0, epsrel=QUAD_RTOL, limit=QUAD_LIMIT)
    tail, _ = integrate.quad(integrand, 50.0, math.inf, epsabs=1e-300, epsrel=QUAD_RTOL, limit=QUAD_LIMIT)
    return head + tail


def one_minus_fprimeF(nl: Nonlinearity, u: float) -> float:
    """
    1 - f'(u)F(u) without catastrophic cancellation.

    Below max(l, 1) the plain difference is accurate; beyond it the remainder
    integral is used, since both factors of f'F are O(1) there while their
    product approaches 1 like C/u^p.
    """
    u = _check_u(u)
    if nl.family is Family.PURE_EXPONENTIAL:
        return 0.0
    if nl.family is Family.POWER:
        return -1.0 / (nl.p - 1.0)
    if u >= max(threshold_l(nl), 1.0):
        return _remainder_integral(nl.p, nl.q, u)
    return 1.0 - fprimeF(nl, u)


# ---------------------------------------------------------------- quasi-scaling

def quasi_scaling(phi, lam: float):
    """u_λ = -log F(u(λx, λ²t)) + 2 log λ, given Φ = -log F(u) sampled at (λx, λ²t)."""
    if not lam > 0.0:
        raise DomainError(f"λ must be positive, got {lam}")
    return np.asarray(phi, dtype=float) + 2.0 * math.log(lam)


def inverse_quasi_scaling(nl: Nonlinearity, u: float, lam: float) -> float:
    """u_λ = F^{-1}(λ^{-2} F(u)) for a value u sampled at (λx, λ²t)."""
    if not lam > 0.0:
        raise DomainError(f"λ must be positive, got {lam}")
    return eval_F_inv_log(nl, _log_F(nl, _check_u(u)) - 2.0 * math.log(lam))
