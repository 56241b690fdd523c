"""Synthetic command/trajectory generation with subjective-driver noise.

Each sample pairs a rendered command with the trajectory an imperfect driver
would execute: distances stretch by a personal scale factor, the whole path
tilts by a heading jitter, and lateral drift accumulates with distance. Zero
noise reproduces the geometric ideal exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import STEP_SPACING_M, TRAJECTORY_CAPACITY
from .dataio import Dataset, LabeledSample
from .geometry import Trajectory
from .grammar import CommandSpec, render, sample_spec

TURN_POINTS = 8


@dataclass(frozen=True)
class DriverNoise:
    """Subjective execution noise; all sigmas >= 0, zero reproduces the ideal."""

    distance_scale_sigma: float = 0.05
    heading_jitter_sigma: float = 0.035  # radians, about 2 degrees
    lateral_drift_sigma: float = 0.01  # meters of drift per meter traveled

    def __post_init__(self):
        for name in ("distance_scale_sigma", "heading_jitter_sigma", "lateral_drift_sigma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


ZERO_NOISE = DriverNoise(0.0, 0.0, 0.0)

_DIRECTION_ANGLE = {
    "forward": 0.0,
    "backward": math.pi,
    "left": math.pi / 2,
    "right": -math.pi / 2,
}
_RELATION_ANGLE = {
    "behind": math.pi,
    "in_front": 0.0,
    "left": math.pi / 2,
    "right": -math.pi / 2,
}


def _sample_scale(noise: DriverNoise, rng: np.random.Generator) -> float:
    # truncated normal via rejection; sigma=0 returns exactly 1.0
    for _ in range(1000):
        s = rng.normal(1.0, noise.distance_scale_sigma)
        if 0.8 <= s <= 1.2:
            return float(s)
    return 1.0


def _translation_points(distance: float) -> np.ndarray:
    """Arc positions 0, 0.3, 0.6, ... with the final point exactly at `distance`.

    When the pose budget saturates (effective distance beyond what capacity
    covers at uniform spacing) the path keeps its spacing and undershoots.
    """
    steps = max(1, int(math.ceil(distance / STEP_SPACING_M - 1e-9)))
    s = np.arange(min(steps, TRAJECTORY_CAPACITY - 1) + 1, dtype=np.float64)
    s *= STEP_SPACING_M
    if steps <= TRAJECTORY_CAPACITY - 1:
        s[-1] = distance
    return s


def oracle_trajectory(
    spec: CommandSpec,
    noise: DriverNoise = ZERO_NOISE,
    rng: np.random.Generator | None = None,
) -> Trajectory:
    """Ideal-driver trajectory for a spec, in the start frame, padded to capacity."""
    if rng is None:
        rng = np.random.default_rng(0)
    scale = _sample_scale(noise, rng)
    jitter = float(rng.normal(0.0, noise.heading_jitter_sigma)) if noise.heading_jitter_sigma > 0 else 0.0

    if spec.intent == "turn":
        magnitude = math.radians(spec.magnitude) * scale
        sign = 1.0 if spec.direction == "left" else -1.0
        headings = jitter + sign * magnitude * np.linspace(0.0, 1.0, TURN_POINTS)
        poses = np.zeros((TURN_POINTS, 3))
        poses[:, 2] = headings
        return Trajectory(poses, TURN_POINTS).padded(TRAJECTORY_CAPACITY)

    if spec.intent == "move":
        travel = _DIRECTION_ANGLE[spec.direction] + jitter
        distance = spec.magnitude * scale
        heading_from = jitter
        heading_to = jitter  # holonomic strafe: heading holds while translating
    else:  # implicit_locate
        travel = _RELATION_ANGLE[spec.relation] + jitter
        distance = spec.distance * scale
        heading_from = jitter
        heading_to = travel

    s = _translation_points(distance)
    h = len(s)
    lateral = np.zeros(h)
    if noise.lateral_drift_sigma > 0:
        steps = np.diff(s)
        lateral[1:] = np.cumsum(rng.normal(0.0, noise.lateral_drift_sigma * steps))
    c, snt = math.cos(travel), math.sin(travel)
    poses = np.zeros((h, 3))
    poses[:, 0] = c * s - snt * lateral
    poses[:, 1] = snt * s + c * lateral
    poses[:, 2] = np.linspace(heading_from, heading_to, h)
    return Trajectory(poses, h).padded(TRAJECTORY_CAPACITY)


def generate_dataset(
    n: int,
    noise: DriverNoise = DriverNoise(),
    seed: int = 0,
    source: str = "synthetic",
) -> Dataset:
    """n labeled (command, trajectory) samples; deterministic given seed."""
    if n < 1:
        raise ValueError("need n >= 1 samples")
    samples = []
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(n)):
        rng = np.random.default_rng(child)
        spec = sample_spec(rng)
        command = render(spec, rng)
        traj = oracle_trajectory(spec, noise, rng)
        samples.append(
            LabeledSample(
                command=command,
                trajectory=traj.poses,
                active_len=traj.active_len,
                source=source,
                family_id=i,
            )
        )
    return Dataset(samples)
