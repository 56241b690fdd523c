"""Adaptive trajectory-length termination from trailing stationarity.

A generated trajectory always carries its full pose capacity; the active
length h is the earliest index from which every windowed displacement stays
below a threshold through the end. Displacements use the weighted SE(2) norm
so in-place turns still count as motion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ATLD_EPSILON, ATLD_WINDOW, HEADING_WEIGHT_M_PER_RAD
from .geometry import Trajectory, weighted_displacement


@dataclass(frozen=True)
class AtldConfig:
    window: int = ATLD_WINDOW  # lookback length in points
    epsilon: float = ATLD_EPSILON  # minimal-displacement threshold

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


def determine_length(
    traj: Trajectory,
    cfg: AtldConfig = AtldConfig(),
    heading_weight: float = HEADING_WEIGHT_M_PER_RAD,
) -> tuple[int, Trajectory]:
    """Pick the active length h and return (h, truncated trajectory).

    For pose index i in (window, n], d_i = ||pose_i - pose_{i-window}|| in the
    weighted SE(2) norm; h is the smallest index such that d_j < epsilon for
    every j from h through n. If the trajectory never settles, h = n.
    """
    poses = traj.poses
    n = poses.shape[0]
    if n < cfg.window + 1:
        raise ValueError(f"need at least window+1={cfg.window + 1} poses, got {n}")
    d = weighted_displacement(poses[cfg.window :], poses[: n - cfg.window], heading_weight)
    moving = np.where(d >= cfg.epsilon)[0]
    if moving.size == 0:
        h = cfg.window + 1
    else:
        last_moving_index = int(moving[-1]) + cfg.window + 1  # 1-based pose index
        h = min(last_moving_index + 1, n)
    return h, Trajectory(poses[:h].copy(), h)
