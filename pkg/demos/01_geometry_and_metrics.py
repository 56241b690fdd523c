"""Poses, trajectories, resampling, and the evaluation metrics.

Run:  python3 demos/01_geometry_and_metrics.py
"""

import numpy as np

from dirtraj import (
    Pose2,
    Trajectory,
    angular_difference,
    arc_length,
    evaluate,
    resample,
    to_start_frame,
    wrap_angle,
)

# Angles always live in (-pi, pi].
print("wrap_angle(3*pi)  =", wrap_angle(3 * np.pi))
print("shortest arc between -175deg and +175deg:",
      np.degrees(angular_difference(np.radians(-175), np.radians(175))), "deg")

# A trajectory is a pose array plus an active length; the tail is padding.
line = np.zeros((22, 3))
line[:, 0] = np.arange(22) * 0.3
traj = Trajectory(line, active_len=18)
print("\n18 active poses, arc length:", arc_length(traj), "m")
print("endpoint:", traj.endpoint())

# Resampling redistributes poses at equal arc-length fractions.
coarse = resample(traj, 5)
print("resampled to 5 poses, x coordinates:", np.round(coarse.poses[:, 0], 3))

# Everything the models see lives in the robot's start frame.
world = Trajectory([[2.0, 1.0, np.pi / 2], [2.0, 3.0, np.pi / 2]])
local = to_start_frame(world)
print("\nworld-frame demo rebased to start frame:")
print(local.poses)

# evaluate() compares generated vs reference trajectories after resampling
# both to 22 points; success is a strict 10 cm endpoint criterion.
ref = traj
gen = Trajectory(line + np.array([0.0, 0.08, 0.0]), active_len=18)  # 8 cm off
result = evaluate(gen, ref)
print("\nshifted copy vs reference:")
print(f"  rmse {result.rmse_cm:.1f} cm, maoe {result.maoe_deg:.2f} deg, "
      f"endpoint {result.endpoint_error_m:.3f} m, success={result.success}")

p = Pose2(1.0, 2.0, 7.0)
print("\nPose2 wraps headings on construction:", p)
