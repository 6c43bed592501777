"""
Discrete residual of the equation satisfied by v in self-similar variables:

    v_s = Δv - (y/2)·∇v - |∇v|²/v + v² - v + (|∇v|²/v)(f'F - 1)

with f'F evaluated at u, where log F(u) = -s - log v, i.e. Φ = s + log v.
"""

import logging
from typing import Tuple

import numpy as np

from src.errors import DomainError
from src.nonlinearity import CoefficientTable, Nonlinearity
from .frame import SelfSimilarFrame, resample


logger = logging.getLogger(__name__)


def y_derivatives(y: np.ndarray, f: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Radial ∂_y f and Δf on a uniform grid starting at y = 0.

    Centered second-order differences inside, the symmetry rule at the
    origin, one-sided second-order formulas at the outer end.
    """
    dy = y[1] - y[0]
    grad = np.gradient(f, dy, edge_order=2)
    grad[0] = 0.0

    lap = np.empty_like(f)
    lap[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / dy ** 2
    lap[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / dy ** 2
    if n > 1:
        lap[1:] += (n - 1) / y[1:] * grad[1:]
    lap[0] = 2.0 * n * (f[1] - f[0]) / dy ** 2
    return grad, lap


def s_derivative(prev: SelfSimilarFrame, frame: SelfSimilarFrame, nxt: SelfSimilarFrame) -> np.ndarray:
    """
    Centered v_s on frame's nodes across unevenly spaced s.

    Raises:
        DomainError: the three frames are not strictly s-ordered
    """
    if not prev.s < frame.s < nxt.s:
        raise DomainError(f"frames not s-ordered: {prev.s}, {frame.s}, {nxt.s}")
    h1, h2 = frame.s - prev.s, nxt.s - frame.s
    v_prev = resample(prev, frame.y)
    v_next = resample(nxt, frame.y)
    return (-h2 / (h1 * (h1 + h2)) * v_prev
            + (h2 - h1) / (h1 * h2) * frame.v
            + h1 / (h2 * (h1 + h2)) * v_next)


def frame_coefficient(frame: SelfSimilarFrame, table: CoefficientTable) -> np.ndarray:
    """f'F - 1 at every node of the frame."""
    return table.coefficient(frame.s + np.log(frame.v))


def residual_veq(
    prev: SelfSimilarFrame,
    frame: SelfSimilarFrame,
    nxt: SelfSimilarFrame,
    nl: Nonlinearity,
    table: CoefficientTable,
) -> np.ndarray:
    """
    LHS - RHS of the v-equation at every node of the middle frame.

    prev and nxt are resampled onto frame's nodes. The last node uses
    one-sided stencils and is included.

    Raises:
        DomainError: frames not s-ordered, or table built for another nonlinearity
    """
    if table.nl != nl:
        raise DomainError(f"coefficient table is for {table.nl}, not {nl}")
    v = frame.v
    v_s = s_derivative(prev, frame, nxt)
    grad, lap = y_derivatives(frame.y, v, frame.n)
    grad_sq_over_v = grad ** 2 / v
    rhs = lap - 0.5 * frame.y * grad - grad_sq_over_v + v ** 2 - v
    rhs += grad_sq_over_v * frame_coefficient(frame, table)
    return v_s - rhs


def veq_norm(frame: SelfSimilarFrame, residual: np.ndarray) -> float:
    """max_j |res_j| ρ(y_j)^{1/2} over |y| <= s^α."""
    inside = frame.y <= frame.ball_radius * (1.0 + 1e-12)
    weight = np.exp(-frame.y[inside] ** 2 / 8.0)
    return float(np.max(np.abs(residual[inside]) * weight))


def residual_series(frames, nl: Nonlinearity, table: CoefficientTable) -> np.ndarray:
    """(s, weighted residual norm) for every interior frame of an ordered series."""
    rows = []
    for prev, frame, nxt in zip(frames, frames[1:], frames[2:]):
        rows.append((frame.s, veq_norm(frame, residual_veq(prev, frame, nxt, nl, table))))
    if rows:
        logger.info(f"v-equation residual: max {max(r[1] for r in rows):.3e} over {len(rows)} frames")
    return np.array(rows, dtype=float).reshape(-1, 2)
