"""
Integral identities checked on frames and on analytic test functions.
"""

import logging
import math
from typing import Callable, Dict, Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from src.errors import DomainError
from .energy import gaussian_weight, radial_integral, sphere_area
from .frame import SelfSimilarFrame
from .residual import y_derivatives


logger = logging.getLogger(__name__)


def stationary_identity(frame: SelfSimilarFrame) -> Tuple[float, float, float]:
    """
    (I1, I2, I1 + (2-n)/2 I2) with I1 = ¼∫|∇v|²/v² |y|² ρ and I2 = ∫|∇v|²/v² ρ.

    A positive bounded stationary solution makes the combination vanish,
    which for n <= 2 forces v ≡ 1.

    Raises:
        DomainError: n > 2
    """
    if frame.n > 2:
        raise DomainError(f"the stationary identity is stated for n <= 2, got n={frame.n}")
    grad, _ = y_derivatives(frame.y, frame.v, frame.n)
    ratio_sq = (grad / frame.v) ** 2
    rho = gaussian_weight(frame.y)
    i1 = 0.25 * radial_integral(frame.y, ratio_sq * frame.y ** 2 * rho, frame.n)
    i2 = radial_integral(frame.y, ratio_sq * rho, frame.n)
    return i1, i2, i1 + 0.5 * (2 - frame.n) * i2


# (g(y, s), ∂_s g(y, s)) for the analytic family
TEST_FUNCTIONS: Dict[str, Tuple[Callable, Callable]] = {
    "constant": (lambda y, s: 1.0, lambda y, s: 0.0),
    "gaussian": (lambda y, s: math.exp(-0.25 * y * y), lambda y, s: 0.0),
    "poly_gaussian": (lambda y, s: s * y * y * math.exp(-0.25 * y * y),
                      lambda y, s: y * y * math.exp(-0.25 * y * y)),
}

FD_STEP = 1e-3
QUAD_EPSABS = 1e-14
QUAD_EPSREL = 1e-13


def _ball_integral(g: Callable, s: float, alpha: float, n: int) -> float:
    radius = s ** alpha
    value, _ = quad(lambda y: g(y, s) * y ** (n - 1), 0.0, radius,
                    epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
    return sphere_area(n) * value


def leibniz_check(alpha: float, test_function_id: str, s_samples: Sequence[float], n: int = 1) -> float:
    """
    max |LHS - RHS| of d/ds ∫_{B_{s^α}} g = ∫ g_s + (α/s) ∮ g (y·ν) dS.

    LHS is a five-point difference (step 1e-3) of the quadrature value; on
    the sphere y·ν = s^α.

    Raises:
        DomainError: unknown test function or s <= 0
    """
    if test_function_id not in TEST_FUNCTIONS:
        raise DomainError(f"unknown test function {test_function_id!r}, expected one of {sorted(TEST_FUNCTIONS)}")
    g, g_s = TEST_FUNCTIONS[test_function_id]
    d = FD_STEP
    worst = 0.0
    for s in s_samples:
        if not s > 2.0 * d:
            raise DomainError(f"s must exceed {2.0 * d}, got {s}")
        values = [_ball_integral(g, s + k * d, alpha, n) for k in (-2, -1, 1, 2)]
        lhs = (values[0] - 8.0 * values[1] + 8.0 * values[2] - values[3]) / (12.0 * d)

        radius = s ** alpha
        interior = _ball_integral(g_s, s, alpha, n)
        boundary = alpha / s * g(radius, s) * radius * sphere_area(n) * radius ** (n - 1)
        worst = max(worst, abs(lhs - (interior + boundary)))
    logger.debug(f"Leibniz check {test_function_id}: max deviation {worst:.3e}")
    return worst


def lipschitz_log_v(frames: Sequence[SelfSimilarFrame]) -> float:
    """Largest |∂_y log v| over all frames (C_run of the Lipschitz bound)."""
    best = 0.0
    for frame in frames:
        grad, _ = y_derivatives(frame.y, np.log(frame.v), frame.n)
        best = max(best, float(np.max(np.abs(grad))))
    return best
