"""A scripted guidance session: the demo plays the human leader.

The leader sees the target; the policy never does. Commands are chosen from
the remaining displacement to the target, exactly how a person would steer a
blindfolded driver.

Needs quickstart.ckpt from demo 04.

Run:  python3 demos/06_guidance_session.py
"""

import math

from dirtraj import load_checkpoint
from dirtraj.service import GuidanceEngine


def leader_command(robot_pose, target_xy):
    """Pick the next command from the robot's frame of the remaining error."""
    dx = target_xy[0] - robot_pose.x
    dy = target_xy[1] - robot_pose.y
    c, s = math.cos(-robot_pose.theta), math.sin(-robot_pose.theta)
    fx, fy = c * dx - s * dy, s * dx + c * dy  # target in robot frame
    heading_to_target = math.degrees(math.atan2(fy, fx))
    dist = math.hypot(fx, fy)
    if abs(heading_to_target) > 120:
        side = "left" if heading_to_target > 0 else "right"
        return f"Turn sharply {side}"
    if abs(heading_to_target) > 30:
        side = "left" if heading_to_target > 0 else "right"
        return f"Turn {side}"
    meters = max(1, min(6, round(dist)))
    return f"Move forward {meters} meters"


policy = load_checkpoint("quickstart.ckpt")
engine = GuidanceEngine(policy)
session = engine.create_session(target_marker=2, seed=123)
target = session.target_xy()
print(f"robot at ({session.robot_pose.x:+.2f}, {session.robot_pose.y:+.2f}, "
      f"{math.degrees(session.robot_pose.theta):+.0f}deg), "
      f"target marker at ({target[0]:+.2f}, {target[1]:+.2f})")

for step in range(10):
    if session.status != "active":
        break
    cmd = leader_command(session.robot_pose, target)
    out = engine.apply_command(session.id, cmd)
    x, y, th = out["pose"]
    print(f"step {out['step_count']}: {cmd!r:28s} -> "
          f"({x:+.2f}, {y:+.2f}, {math.degrees(th):+.0f}deg)  "
          f"dist {session.distance_to_target():.2f} m  [{out['status']}]")

report = engine.report(session.id)
print(f"\nreport: error {report['final_error_m']:.2f} m, "
      f"{report['num_steps']} steps, {report['elapsed_s']:.1f} s, "
      f"status {report['status']}")
