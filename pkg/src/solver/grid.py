"""
Radial grid on the ball B_R and the time slices stored on it.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from src.errors import DomainError


MIN_CELLS = 64


@dataclass(frozen=True)
class RadialGrid:
    """
    Nodes r_j = j h, h = R / J, on [0, R] in n space dimensions.

    n = 1, 2 is the range the blow-up profile result covers; larger n is
    accepted and flagged by the configuration layer.
    """
    n: int
    R: float
    J: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"dimension n must be a positive integer, got {self.n}")
        if not self.R > 0.0:
            raise DomainError(f"radius R must be positive, got {self.R}")
        if int(self.J) != self.J or self.J < MIN_CELLS:
            raise DomainError(f"J must be an integer >= {MIN_CELLS}, got {self.J}")

    @property
    def h(self) -> float:
        return self.R / self.J

    @cached_property
    def r(self) -> np.ndarray:
        nodes = np.arange(self.J + 1, dtype=float) * self.h
        nodes[-1] = self.R
        nodes.setflags(write=False)
        return nodes

    def describe(self) -> dict:
        return {"n": self.n, "R": self.R, "J": self.J}


@dataclass
class Snapshot:
    """
    One time slice in Φ-space, Φ = -log F(u).

    Attributes:
        t: Time; saturates in floating point near blow-up, use log_dt_prev
            for gaps
        phi: Φ at every node; phi[J] = -inf encodes the Dirichlet value u = 0
            when F(0) is infinite
        umax: u(0, t)
        step_index: Accepted steps since t = 0
        log_dt_prev: log of the time elapsed since the previous stored
            snapshot (nan for the first one)
    """
    t: float
    phi: np.ndarray
    umax: float
    step_index: int
    log_dt_prev: float = math.nan
    repr: str = field(default="phi_space")

    @property
    def phi_max(self) -> float:
        return float(self.phi[0])
