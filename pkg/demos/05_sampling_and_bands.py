"""Sample trajectories from a checkpoint; visualize paraphrase consistency.

Needs quickstart.ckpt from demo 04.

Run:  python3 demos/05_sampling_and_bands.py
"""

import numpy as np

from dirtraj import load_checkpoint, paraphrase, sample, sample_batch
from dirtraj.cli import trajectory_svg
from dirtraj.metrics import trajectory_band

policy = load_checkpoint("quickstart.ckpt")
schedule = policy.make_schedule()

# One command, one seed, one trajectory; same seed gives the identical path.
traj = sample(policy, schedule, "Move forward 4 meters", np.random.default_rng(3))
print(f"'Move forward 4 meters' -> {traj.active_len} poses, "
      f"endpoint {np.round(traj.active[-1], 2)}")

with open("forward4.svg", "w") as fh:
    fh.write(trajectory_svg(traj))
print("wrote forward4.svg")

# Variance-band view over paraphrases of one command family: resample each
# trajectory to 22 points and look at the pointwise mean and spread.
source = "Move forward 4 meters"
commands = [source] + paraphrase(source, 29, np.random.default_rng(5))
trajs = sample_batch(policy, schedule, commands[:30], seed=77)
mean, std = trajectory_band(trajs, points=22)
print("\npointwise band along the path (every 4th point):")
for i in range(0, 22, 4):
    print(f"  s={i:2d}: mean ({mean[i, 0]:+.2f}, {mean[i, 1]:+.2f})  "
          f"std ({std[i, 0]:.2f}, {std[i, 1]:.2f})")
ends = np.array([t.active[-1][:2] for t in trajs])
spread = float(np.sqrt(((ends - ends.mean(0)) ** 2).sum(1).mean()))
print(f"\nendpoint positional spread over 30 paraphrases: {spread:.3f} m")
