"""
JSON forms of snapshots, frames and estimates.

Floats are written as decimal strings with 17 significant digits, which
round-trips every double and keeps non-finite values ("inf", "-inf", "nan")
inside plain JSON.
"""

import math
from typing import Any, Dict, Iterable, List

import numpy as np

from src.selfsimilar import SelfSimilarFrame
from src.solver.estimate import BlowupEstimate
from src.solver.grid import Snapshot


def encode_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def decode_float(text) -> float:
    return float(text)


def encode_array(values: Iterable[float]) -> List[str]:
    return [encode_float(v) for v in values]


def decode_array(items: Iterable) -> np.ndarray:
    return np.array([float(v) for v in items], dtype=float)


def snapshot_to_dict(snap: Snapshot) -> Dict[str, Any]:
    return {
        "t": encode_float(snap.t),
        "phi": encode_array(snap.phi),
        "umax": encode_float(snap.umax),
        "step_index": int(snap.step_index),
        "log_dt_prev": encode_float(snap.log_dt_prev),
        "repr": snap.repr,
    }


def snapshot_from_dict(data: Dict[str, Any]) -> Snapshot:
    return Snapshot(
        t=decode_float(data["t"]),
        phi=decode_array(data["phi"]),
        umax=decode_float(data["umax"]),
        step_index=int(data["step_index"]),
        log_dt_prev=decode_float(data["log_dt_prev"]),
        repr=data.get("repr", "phi_space"),
    )


def frame_to_dict(frame: SelfSimilarFrame) -> Dict[str, Any]:
    return {
        "s": encode_float(frame.s),
        "alpha": encode_float(frame.alpha),
        "y_nodes": encode_array(frame.y),
        "v": encode_array(frame.v),
        "source_t": encode_float(frame.source_t),
        "n": int(frame.n),
        "index": int(frame.index),
        "truncated": bool(frame.truncated),
    }


def frame_from_dict(data: Dict[str, Any]) -> SelfSimilarFrame:
    return SelfSimilarFrame(
        s=decode_float(data["s"]),
        alpha=decode_float(data["alpha"]),
        y=decode_array(data["y_nodes"]),
        v=decode_array(data["v"]),
        source_t=decode_float(data["source_t"]),
        n=int(data["n"]),
        index=int(data.get("index", -1)),
        truncated=bool(data.get("truncated", False)),
    )


def estimate_to_dict(est: BlowupEstimate) -> Dict[str, Any]:
    return {
        "T_est": encode_float(est.T_est),
        "log_gap_last": encode_float(est.log_gap_last),
        "method": est.method,
        "uncertainty": encode_float(est.uncertainty),
        "relative_uncertainty": encode_float(est.relative_uncertainty),
        "non_monotone": bool(est.non_monotone),
        "log_gaps": encode_array(est.log_gaps),
        "extrapolants": encode_array(est.extrapolants),
    }


def estimate_from_dict(data: Dict[str, Any]) -> BlowupEstimate:
    return BlowupEstimate(
        T_est=decode_float(data["T_est"]),
        log_gap_last=decode_float(data["log_gap_last"]),
        method=data["method"],
        uncertainty=decode_float(data["uncertainty"]),
        relative_uncertainty=decode_float(data["relative_uncertainty"]),
        non_monotone=bool(data["non_monotone"]),
        log_gaps=decode_array(data["log_gaps"]).tolist(),
        extrapolants=decode_array(data["extrapolants"]).tolist(),
    )


def plain(value):
    """Numbers (including numpy scalars and non-finite values) made JSON-safe, recursively."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return encode_float(value) if not math.isfinite(value) else float(value)
    return value
