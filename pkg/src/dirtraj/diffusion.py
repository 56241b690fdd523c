"""Denoising-diffusion machinery for normalized trajectory vectors.

A trajectory becomes a flat vector of per-pose (x/s, y/s, cos h, sin h)
features. The schedule follows DDPM ancestral sampling with a linear beta
ramp: step k runs from K (pure noise) down to 1 (clean), and the final step
injects no noise.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .config import (
    ARENA_HALF_EXTENT_M,
    BETA_END,
    BETA_START,
    DIFFUSION_STEPS,
    TRAJECTORY_CAPACITY,
)
from .geometry import Trajectory

POINT_DIM = 4


@dataclass(frozen=True)
class ScheduleConfig:
    steps: int = DIFFUSION_STEPS
    beta_start: float = BETA_START
    beta_end: float = BETA_END


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step coefficients; arrays are indexed [k-1] for step k in 1..steps."""

    steps: int
    beta: np.ndarray
    alpha: np.ndarray  # 1/sqrt(1 - beta_k)
    gamma: np.ndarray  # beta_k / sqrt(1 - abar_k)
    sigma: np.ndarray  # posterior std sqrt(beta_k (1-abar_{k-1})/(1-abar_k)); 0 at k=1
    abar: np.ndarray  # cumulative product of (1 - beta)

    def config(self) -> ScheduleConfig:
        return ScheduleConfig(self.steps, float(self.beta[0]), float(self.beta[-1]))


def make_schedule(
    steps: int = DIFFUSION_STEPS,
    beta_start: float = BETA_START,
    beta_end: float = BETA_END,
) -> NoiseSchedule:
    if steps < 2:
        raise ValueError("schedule needs at least 2 steps")
    beta = np.linspace(beta_start, beta_end, steps, dtype=np.float64)
    a = 1.0 - beta
    abar = np.cumprod(a)
    alpha = 1.0 / np.sqrt(a)
    gamma = beta / np.sqrt(1.0 - abar)
    # posterior ("small") variance: matches the forward-process marginal the
    # noise predictor was trained on; the large sqrt(beta) choice over-noises
    # the low-noise steps and smears sharp conditionals. abar_0 = 1 makes the
    # final (k=1) step noiseless by construction.
    abar_prev = np.concatenate([[1.0], abar[:-1]])
    sigma = np.sqrt(beta * (1.0 - abar_prev) / (1.0 - abar))
    for arr in (beta, a, abar, alpha, gamma, sigma):
        arr.setflags(write=False)
    return NoiseSchedule(steps=steps, beta=beta, alpha=alpha, gamma=gamma,
                         sigma=sigma, abar=abar)


@dataclass(frozen=True)
class NormalizationStats:
    """Maps arena-scale poses to roughly unit-scale network features."""

    xy_scale: float = ARENA_HALF_EXTENT_M

    def __post_init__(self):
        if self.xy_scale <= 0:
            raise ValueError("xy_scale must be positive")


def normalize_trajectory(traj: Trajectory, stats: NormalizationStats,
                         capacity: int = TRAJECTORY_CAPACITY) -> np.ndarray:
    """Flatten to (4*capacity,): per pose (x/s, y/s, cos th, sin th)."""
    poses = traj.padded(capacity).poses
    xy = poses[:, :2] / stats.xy_scale
    if np.any(np.abs(xy) > 2.0):
        warnings.warn("pose outside twice the arena scale; clamping", stacklevel=2)
        xy = np.clip(xy, -2.0, 2.0)
    feats = np.empty((capacity, POINT_DIM), dtype=np.float64)
    feats[:, 0] = xy[:, 0]
    feats[:, 1] = xy[:, 1]
    feats[:, 2] = np.cos(poses[:, 2])
    feats[:, 3] = np.sin(poses[:, 2])
    return feats.reshape(-1)


def denormalize_trajectory(vec: np.ndarray, stats: NormalizationStats) -> Trajectory:
    """Invert normalize: headings recovered by projecting (c, s) to the unit circle."""
    feats = np.asarray(vec, dtype=np.float64).reshape(-1, POINT_DIM)
    norms = np.hypot(feats[:, 2], feats[:, 3])
    bad = norms == 0.0
    if np.any(bad):
        warnings.warn("zero-norm heading pair; defaulting heading to 0", stacklevel=2)
    c = np.where(bad, 1.0, feats[:, 2])
    s = np.where(bad, 0.0, feats[:, 3])
    poses = np.empty((feats.shape[0], 3), dtype=np.float64)
    poses[:, 0] = feats[:, 0] * stats.xy_scale
    poses[:, 1] = feats[:, 1] * stats.xy_scale
    poses[:, 2] = np.arctan2(s, c)
    return Trajectory(poses)


def forward_corrupt(tau0: np.ndarray, k: int, schedule: NoiseSchedule,
                    rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Corrupt a clean vector to step k: sqrt(abar_k) tau0 + sqrt(1-abar_k) eps."""
    if not 1 <= k <= schedule.steps:
        raise ValueError(f"step {k} outside [1, {schedule.steps}]")
    tau0 = np.asarray(tau0)
    eps = rng.standard_normal(tau0.shape).astype(tau0.dtype, copy=False)
    ab = schedule.abar[k - 1]
    tau_k = np.sqrt(ab) * tau0 + np.sqrt(1.0 - ab) * eps
    return tau_k.astype(tau0.dtype, copy=False), eps


def denoise_step(tau_k: np.ndarray, k: int, schedule: NoiseSchedule,
                 eps_hat: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One refinement: alpha_k (tau_k - gamma_k eps_hat) + N(0, sigma_k^2 I)."""
    if not 1 <= k <= schedule.steps:
        raise ValueError(f"step {k} outside [1, {schedule.steps}]")
    tau_k = np.asarray(tau_k)
    mean = schedule.alpha[k - 1] * (tau_k - schedule.gamma[k - 1] * np.asarray(eps_hat))
    sig = schedule.sigma[k - 1]
    if sig > 0.0:
        mean = mean + sig * rng.standard_normal(tau_k.shape)
    return mean.astype(tau_k.dtype, copy=False)
