"""Trajectory evaluation: success rate, positional RMSE, and orientation error.

Generated and reference trajectories are aligned by resampling both to a
fixed number of points at equal arc-length fractions, so the comparison
penalizes shape deviation rather than timing. Endpoint error (and success)
uses the unresampled final active poses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RESAMPLE_POINTS, SUCCESS_THRESHOLD_M
from .geometry import Trajectory, angular_difference, resample


@dataclass(frozen=True)
class EvalResult:
    rmse_cm: float
    maoe_deg: float
    success: bool
    endpoint_error_m: float


@dataclass(frozen=True)
class EvalSummary:
    sr_percent: float
    rmse_mean_cm: float
    rmse_std_cm: float
    maoe_mean_deg: float
    maoe_std_deg: float
    count: int


def evaluate(
    gen: Trajectory,
    ref: Trajectory,
    success_threshold: float = SUCCESS_THRESHOLD_M,
    points: int = RESAMPLE_POINTS,
) -> EvalResult:
    """Compare a generated trajectory against a reference in the same frame."""
    g = resample(gen, points).poses
    r = resample(ref, points).poses
    sq = (g[:, 0] - r[:, 0]) ** 2 + (g[:, 1] - r[:, 1]) ** 2
    rmse_cm = 100.0 * float(np.sqrt(np.mean(sq)))
    maoe_deg = float(np.degrees(np.mean(angular_difference(g[:, 2], r[:, 2]))))
    ge = gen.active[-1, :2]
    re = ref.active[-1, :2]
    endpoint_error_m = float(np.hypot(ge[0] - re[0], ge[1] - re[1]))
    return EvalResult(
        rmse_cm=rmse_cm,
        maoe_deg=maoe_deg,
        success=endpoint_error_m < success_threshold,
        endpoint_error_m=endpoint_error_m,
    )


def _sample_std(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1))


def trajectory_band(trajs, points: int = RESAMPLE_POINTS):
    """Pointwise mean and spread over a family of trajectories.

    Resamples every trajectory to `points` and returns (mean, std), each of
    shape (points, 2), over the xy positions: the variance-band view of how
    consistently one command family is executed.
    """
    stack = np.stack([resample(t, points).poses[:, :2] for t in trajs])
    return stack.mean(axis=0), stack.std(axis=0)


def aggregate(results) -> EvalSummary:
    """Batch summary: success rate plus sample mean/std of RMSE and MAOE."""
    results = list(results)
    if not results:
        raise ValueError("aggregate needs at least one result")
    rmse = np.array([r.rmse_cm for r in results], dtype=np.float64)
    maoe = np.array([r.maoe_deg for r in results], dtype=np.float64)
    successes = sum(1 for r in results if r.success)
    return EvalSummary(
        sr_percent=100.0 * successes / len(results),
        rmse_mean_cm=float(np.mean(rmse)),
        rmse_std_cm=_sample_std(rmse),
        maoe_mean_deg=float(np.mean(maoe)),
        maoe_std_deg=_sample_std(maoe),
        count=len(results),
    )
