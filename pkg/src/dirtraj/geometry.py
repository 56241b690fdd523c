"""SE(2) primitives: poses, trajectories, angle arithmetic, resampling, frames.

Poses are (x, y, theta) with theta wrapped into (-pi, pi]. Trajectories hold a
fixed-capacity pose array with an active length; the padded tail repeats the
final active pose. All functions are pure and safe for concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import HEADING_WEIGHT_M_PER_RAD

TWO_PI = 2.0 * np.pi


def wrap_angle(theta):
    """Wrap an angle (scalar or array) into (-pi, pi]."""
    theta = np.asarray(theta, dtype=np.float64)
    if not np.all(np.isfinite(theta)):
        raise ValueError("wrap_angle requires finite input")
    wrapped = np.mod(theta, TWO_PI)
    wrapped = np.where(wrapped > np.pi, wrapped - TWO_PI, wrapped)
    if wrapped.ndim == 0:
        return float(wrapped)
    return wrapped


def angular_difference(a, b):
    """Absolute shortest-arc difference between two angles, in [0, pi]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("angular_difference requires finite input")
    d = np.abs(wrap_angle(a - b))
    # wrap_angle maps the antipode to +pi, so |.| already lands in [0, pi]
    if np.ndim(d) == 0:
        return float(d)
    return d


@dataclass(frozen=True)
class Pose2:
    """A planar rigid pose: position in meters, heading in radians (-pi, pi]."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y) and np.isfinite(self.theta)):
            raise ValueError("Pose2 fields must be finite")
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta], dtype=np.float64)

    @staticmethod
    def from_array(arr) -> "Pose2":
        arr = np.asarray(arr, dtype=np.float64)
        return Pose2(float(arr[0]), float(arr[1]), float(arr[2]))


class Trajectory:
    """Ordered pose sequence with an active length.

    `poses` is an (n, 3) float64 array of (x, y, theta) rows; `active_len` is
    the number of leading poses that carry motion. When a trajectory is used
    as a diffusion target it is padded to full capacity by repeating the final
    active pose (see `padded`).
    """

    __slots__ = ("poses", "active_len")

    def __init__(self, poses, active_len: int | None = None):
        poses = np.array(poses, dtype=np.float64)
        if poses.ndim != 2 or poses.shape[1] != 3:
            raise ValueError(f"poses must have shape (n, 3), got {poses.shape}")
        if poses.shape[0] < 1:
            raise ValueError("trajectory needs at least one pose")
        if not np.all(np.isfinite(poses)):
            raise ValueError("trajectory poses must be finite")
        poses[:, 2] = wrap_angle(poses[:, 2])
        if active_len is None:
            active_len = poses.shape[0]
        active_len = int(active_len)
        if not 1 <= active_len <= poses.shape[0]:
            raise ValueError(
                f"active_len {active_len} out of range [1, {poses.shape[0]}]"
            )
        poses.setflags(write=False)
        self.poses = poses
        self.active_len = active_len

    @property
    def capacity(self) -> int:
        return self.poses.shape[0]

    @property
    def active(self) -> np.ndarray:
        return self.poses[: self.active_len]

    def endpoint(self) -> Pose2:
        return Pose2.from_array(self.poses[self.active_len - 1])

    def padded(self, capacity: int) -> "Trajectory":
        """Pad to `capacity` poses by repeating the final active pose."""
        if capacity < self.active_len:
            raise ValueError("capacity smaller than active length")
        out = np.empty((capacity, 3), dtype=np.float64)
        out[: self.active_len] = self.active
        out[self.active_len :] = self.active[-1]
        return Trajectory(out, self.active_len)

    def truncated(self) -> "Trajectory":
        """Drop the padded tail, keeping only active poses."""
        return Trajectory(self.active.copy(), self.active_len)

    def __repr__(self) -> str:
        return f"Trajectory(active_len={self.active_len}, capacity={self.capacity})"


def arc_length(traj: Trajectory) -> float:
    """Total xy path length over the active poses (0 for a single pose)."""
    pts = traj.active[:, :2]
    if pts.shape[0] < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def _continuous_headings(theta: np.ndarray) -> np.ndarray:
    """Unwrap headings so consecutive steps follow the shortest angular arc."""
    steps = wrap_angle(np.diff(theta))
    return np.concatenate([[theta[0]], theta[0] + np.cumsum(steps)])


def resample(traj: Trajectory, n: int) -> Trajectory:
    """Resample the active path to `n` poses at equal arc-length fractions.

    Headings interpolate along the shortest angular arc; endpoints are
    preserved exactly. A zero-length path of identical poses yields n copies
    of that pose; a zero-length path with heading change (in-place turn) is
    resampled uniformly in point index instead, which keeps the heading
    profile meaningful.
    """
    if n < 2:
        raise ValueError("resample needs n >= 2")
    act = traj.active
    h = act.shape[0]
    seg = np.linalg.norm(np.diff(act[:, :2], axis=0), axis=1) if h > 1 else np.zeros(0)
    total = float(seg.sum())
    if h == 1 or (total == 0.0 and np.allclose(act, act[0])):
        out = np.tile(act[0], (n, 1))
        return Trajectory(out, n)

    theta_cont = _continuous_headings(act[:, 2])
    if total == 0.0:
        # pure rotation: parameterize by index
        t = np.linspace(0.0, h - 1.0, n)
        base = np.arange(h, dtype=np.float64)
        xs = np.interp(t, base, act[:, 0])
        ys = np.interp(t, base, act[:, 1])
        ths = np.interp(t, base, theta_cont)
    else:
        s = np.concatenate([[0.0], np.cumsum(seg)])
        targets = np.linspace(0.0, total, n)
        xs = np.interp(targets, s, act[:, 0])
        ys = np.interp(targets, s, act[:, 1])
        ths = np.interp(targets, s, theta_cont)
    out = np.stack([xs, ys, ths], axis=1)
    out[0] = act[0]
    out[-1] = act[-1]
    return Trajectory(out, n)


def to_start_frame(traj: Trajectory) -> Trajectory:
    """Rigidly transform all poses so the first active pose becomes (0, 0, 0)."""
    act = traj.poses
    x0, y0, th0 = traj.active[0]
    c, s = np.cos(-th0), np.sin(-th0)
    dx = act[:, 0] - x0
    dy = act[:, 1] - y0
    out = np.empty_like(act)
    out[:, 0] = c * dx - s * dy
    out[:, 1] = s * dx + c * dy
    out[:, 2] = wrap_angle(act[:, 2] - th0)
    return Trajectory(out, traj.active_len)


def se2_compose(base: Pose2, local: Pose2) -> Pose2:
    """Compose two poses: express `local` (given in base's frame) in the world frame."""
    c, s = np.cos(base.theta), np.sin(base.theta)
    return Pose2(
        base.x + c * local.x - s * local.y,
        base.y + s * local.x + c * local.y,
        base.theta + local.theta,
    )


def transform_trajectory(traj: Trajectory, base: Pose2) -> Trajectory:
    """Apply `base` as an SE(2) group action to every pose of a start-frame trajectory."""
    c, s = np.cos(base.theta), np.sin(base.theta)
    p = traj.poses
    out = np.empty_like(p)
    out[:, 0] = base.x + c * p[:, 0] - s * p[:, 1]
    out[:, 1] = base.y + s * p[:, 0] + c * p[:, 1]
    out[:, 2] = wrap_angle(p[:, 2] + base.theta)
    return Trajectory(out, traj.active_len)


def weighted_displacement(a, b, heading_weight: float = HEADING_WEIGHT_M_PER_RAD):
    """SE(2) displacement norm sqrt(dx^2 + dy^2 + (w*dtheta)^2).

    `a` and `b` are pose rows or (n, 3) arrays; dtheta takes the shortest arc.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    dx = a[..., 0] - b[..., 0]
    dy = a[..., 1] - b[..., 1]
    dth = wrap_angle(a[..., 2] - b[..., 2])
    d = np.sqrt(dx * dx + dy * dy + (heading_weight * dth) ** 2)
    if np.ndim(d) == 0:
        return float(d)
    return d
