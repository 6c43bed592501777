"""
Tabulated coefficient c(Φ) = f'F(u) - 1 and inverse u(Φ), with Φ = -log F(u).

The solver needs both at every node on every step. Evaluating F^{-1} and the
remainder integral pointwise is far too slow for that, so they are sampled
once per nonlinearity on a dense u-grid and interpolated monotonically in Φ.
Anything outside the sampled range falls back to the exact pointwise path.
"""

import logging
import math
from functools import lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator

from src.errors import DomainError
from .nonlinearity import (
    Family,
    Nonlinearity,
    eval_F_inv_log,
    eval_log_F,
    one_minus_fprimeF,
)


logger = logging.getLogger(__name__)


def _u_nodes(nl: Nonlinearity, phi_max: float) -> np.ndarray:
    p = nl.p
    parts = []
    if nl.q >= 1.0:
        parts.append(np.geomspace(1e-10, 0.5, 120, endpoint=False))
        parts.append(np.linspace(0.5, 3.0, 250, endpoint=False))
    else:
        parts.append(np.linspace(0.0, 3.0, 250, endpoint=False))
    # uniform in u^p, which is ≈ Φ for large u
    x = np.arange(3.0 ** p, phi_max + 10.0, 0.25)
    parts.append(x ** (1.0 / p))
    return np.concatenate(parts)


class CoefficientTable:
    """
    c(Φ) and u(Φ) for one nonlinearity up to Φ ≈ phi_max.

    Closed forms are used for the two reference families; only the
    super-exponential family is actually tabulated.
    """

    def __init__(self, nl: Nonlinearity, phi_max: float):
        self.nl = nl
        self.phi_max = float(phi_max)
        if nl.family is Family.SUPER_EXPONENTIAL and nl.q == 0.0:
            self.phi_floor = -eval_log_F(nl, 0.0).log_magnitude
        else:
            self.phi_floor = -math.inf

        if nl.family is not Family.SUPER_EXPONENTIAL:
            self._c = None
            self._u = None
            return

        u = _u_nodes(nl, self.phi_max)
        phi = np.array([-eval_log_F(nl, ui).log_magnitude for ui in u])
        c = np.array([-one_minus_fprimeF(nl, ui) for ui in u])

        keep = np.concatenate(([True], np.diff(phi) > 0.0))
        phi, c, u = phi[keep], c[keep], u[keep]

        self.phi_lo = phi[0]
        self.phi_hi = phi[-1]
        self._c = PchipInterpolator(phi, c, extrapolate=False)
        if nl.q >= 1.0:
            self._log_u = PchipInterpolator(phi, np.log(u), extrapolate=False)
            self._u = None
        else:
            self._u = PchipInterpolator(phi, u, extrapolate=False)
        logger.debug(f"Coefficient table for {nl}: {phi.size} nodes, Φ ∈ [{self.phi_lo:.4g}, {self.phi_hi:.4g}]")

    def _clip_floor(self, phi: np.ndarray) -> np.ndarray:
        if not math.isfinite(self.phi_floor):
            return phi
        slack = 1e-9 * max(1.0, abs(self.phi_floor))
        below = phi < self.phi_floor
        if np.any(phi[below] < self.phi_floor - slack):
            worst = float(np.min(phi[below]))
            raise DomainError(f"Φ={worst} is below -log F(0)={self.phi_floor}")
        return np.where(below, self.phi_floor, phi)

    def coefficient(self, phi) -> np.ndarray:
        """c(Φ) = f'(u)F(u) - 1 at u = F^{-1}(e^{-Φ})."""
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        nl = self.nl
        if nl.family is Family.PURE_EXPONENTIAL:
            return np.zeros_like(phi)
        if nl.family is Family.POWER:
            return np.full_like(phi, 1.0 / (nl.p - 1.0))

        phi = self._clip_floor(phi)
        out = self._c(phi)
        for j in np.nonzero(np.isnan(out))[0]:
            out[j] = self._exact_coefficient(phi[j])
        return out

    def u_of(self, phi) -> np.ndarray:
        """u = F^{-1}(e^{-Φ}); Φ = -inf maps to u = 0."""
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        nl = self.nl
        if nl.family is Family.PURE_EXPONENTIAL:
            return phi.copy()
        if nl.family is Family.POWER:
            return np.exp((phi - math.log(nl.p - 1.0)) / (nl.p - 1.0))

        phi = self._clip_floor(phi)
        if self._u is not None:
            out = self._u(phi)
        else:
            with np.errstate(invalid="ignore"):
                out = np.exp(self._log_u(phi))
        for j in np.nonzero(np.isnan(out))[0]:
            out[j] = 0.0 if phi[j] == -math.inf else eval_F_inv_log(nl, -phi[j])
        return out

    def _exact_coefficient(self, phi: float) -> float:
        nl = self.nl
        if phi == -math.inf:
            # u -> 0 with q >= 1: f'F -> q/(q-1), unbounded for q = 1
            return math.inf if nl.q == 1.0 else 1.0 / (nl.q - 1.0)
        return -one_minus_fprimeF(nl, eval_F_inv_log(nl, -phi))


@lru_cache(maxsize=16)
def _cached_table(nl: Nonlinearity, phi_cap: float) -> CoefficientTable:
    return CoefficientTable(nl, phi_cap)


def coefficient_table(nl: Nonlinearity, phi_max: float) -> CoefficientTable:
    """Shared table covering at least phi_max; caps are rounded up to multiples of 50."""
    phi_cap = 50.0 * math.ceil(max(phi_max, 50.0) / 50.0)
    return _cached_table(nl, phi_cap)
