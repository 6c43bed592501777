"""
Self-similar frames: v(y, s) = (T - t) / F(u(x, t)) with y = x / √(T - t), s = -log(T - t).

In Φ-space this is v = exp(-s + Φ(y e^{-s/2})), so a frame only needs the
snapshot and its compensated log gap; T - t itself is never formed.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from src.errors import DomainError
from src.solver.grid import RadialGrid, Snapshot


logger = logging.getLogger(__name__)


MIN_S = 1.0


@dataclass
class SelfSimilarFrame:
    """
    v on a uniform y-grid covering [0, extent].

    Attributes:
        s: -log(T - t) from the compensated gap
        alpha: Exponent of the analysis ball B_{s^α}
        y: Uniform nodes, y[0] = 0
        v: Profile values, all positive
        source_t: Time of the snapshot the frame was built from
        n: Space dimension
        index: Index of the source snapshot in the run
        truncated: extent < s^α (the grid or y_max cut the ball short)
    """
    s: float
    alpha: float
    y: np.ndarray
    v: np.ndarray
    source_t: float
    n: int
    index: int = -1
    truncated: bool = False

    @property
    def extent(self) -> float:
        return float(self.y[-1])

    @property
    def ball_radius(self) -> float:
        return self.s ** self.alpha

    @property
    def dy(self) -> float:
        return float(self.y[1] - self.y[0])

    def interpolator(self) -> PchipInterpolator:
        return mirrored_pchip(self.y, self.v, extrapolate=True)


def mirrored_pchip(x: np.ndarray, values: np.ndarray, extrapolate: bool = False) -> PchipInterpolator:
    """Monotone cubic through data reflected about x = 0, so the slope at the origin is 0."""
    xm = np.concatenate((-x[:0:-1], x))
    vm = np.concatenate((values[:0:-1], values))
    return PchipInterpolator(xm, vm, extrapolate=extrapolate)


def phi_interpolator(snapshot: Snapshot, grid: RadialGrid):
    phi = snapshot.phi
    r = grid.r
    if phi[-1] == -math.inf:
        phi, r = phi[:-1], r[:-1]
    return mirrored_pchip(r, phi), float(r[-1])


def to_frame(
    snapshot: Snapshot,
    log_gap: float,
    alpha: float,
    y_resolution: int,
    grid: RadialGrid,
    y_max: float = 8.0,
    index: int = -1,
    y_nodes: Optional[np.ndarray] = None,
) -> SelfSimilarFrame:
    """
    Transform one snapshot into the self-similar frame.

    The y-extent is min(s^α, r_max e^{s/2}, y_max), where r_max is R, or the
    last node with finite Φ when the wall value is Φ = -inf.

    Args:
        snapshot: Solution slice in Φ-space
        log_gap: log(T_est - t) for this snapshot, from the estimate
        alpha: Ball exponent
        y_resolution: Number of y-intervals
        grid: The run's radial grid
        y_max: Absolute cap on the extent
        index: Snapshot index recorded in the frame
        y_nodes: Explicit nodes instead of the default uniform grid

    Raises:
        DomainError: s <= 0, or a requested y lies beyond Ω(s)
    """
    s = -float(log_gap)
    if not s > 0.0:
        raise DomainError(f"frames need s > 0, got s={s}")
    interp, r_max = phi_interpolator(snapshot, grid)
    scale = math.exp(-0.5 * s)
    y_limit = r_max / scale

    ball = s ** alpha
    if y_nodes is None:
        extent = min(ball, y_limit, y_max)
        y = np.linspace(0.0, extent, y_resolution + 1)
    else:
        y = np.asarray(y_nodes, dtype=float)
        extent = float(y[-1])
        if extent > y_limit * (1.0 + 1e-12):
            raise DomainError(f"y={extent} lies beyond Ω(s) (y e^(-s/2) > {r_max})")

    r = np.minimum(y * scale, r_max)
    v = np.exp(interp(r) - s)
    truncated = extent < ball * (1.0 - 1e-12)
    if truncated:
        logger.warning(f"frame at s={s:.4f} truncated to y <= {extent:.4g} (ball radius {ball:.4g})")
    return SelfSimilarFrame(s=s, alpha=alpha, y=y, v=v, source_t=snapshot.t, n=grid.n,
                            index=index, truncated=truncated)


def build_frames(
    snapshots: Sequence[Snapshot],
    log_gaps: Sequence[float],
    alpha: float,
    y_resolution: int,
    grid: RadialGrid,
    y_max: float = 8.0,
    threads: int = 1,
) -> List[SelfSimilarFrame]:
    """Frames for every snapshot with s >= 1, in snapshot order."""
    jobs = [(k, snap, lg) for k, (snap, lg) in enumerate(zip(snapshots, log_gaps)) if -lg >= MIN_S]

    def make(job):
        k, snap, lg = job
        return to_frame(snap, lg, alpha, y_resolution, grid, y_max, index=k)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            frames = list(pool.map(make, jobs))
    else:
        frames = [make(job) for job in jobs]
    logger.info(f"Built {len(frames)} frames (s from {frames[0].s:.3f} to {frames[-1].s:.3f})" if frames
                else "No snapshot reached s >= 1; no frames built")
    return frames


def frame_phi(frame: SelfSimilarFrame):
    """(r, Φ) on the frame's nodes: r = y e^{-s/2}, Φ = s + log v = -log F(u)."""
    return frame.y * math.exp(-0.5 * frame.s), frame.s + np.log(frame.v)


def resample(frame: SelfSimilarFrame, y: np.ndarray) -> np.ndarray:
    """v of frame evaluated on other nodes."""
    if np.array_equal(frame.y, y):
        return frame.v
    return frame.interpolator()(y)
