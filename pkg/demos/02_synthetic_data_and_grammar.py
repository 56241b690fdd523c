"""The command grammar and the synthetic driver that labels it.

Run:  python3 demos/02_synthetic_data_and_grammar.py
"""

import numpy as np

from dirtraj import (
    DriverNoise,
    ZERO_NOISE,
    generate_dataset,
    oracle_trajectory,
    parse_command,
    standardize,
)
from dirtraj.grammar import CommandSpec, render, sample_spec

rng = np.random.default_rng(0)

# Commands are drawn from a closed slot grammar and rendered through many
# surface templates; standardization maps them back to canonical form.
for _ in range(5):
    spec = sample_spec(rng)
    text = render(spec, rng)
    std = standardize(text)
    print(f"{text!r:55s} -> {std!r}")
    assert parse_command(std) == spec

# The trajectory oracle plays the human driver. Zero noise is the geometric
# ideal; the default profile stretches distances ~5%, tilts the whole path
# ~2 degrees, and lets the robot drift sideways as it goes.
spec = CommandSpec(intent="move", direction="forward", magnitude=5.0)
ideal = oracle_trajectory(spec, ZERO_NOISE, np.random.default_rng(1))
noisy = oracle_trajectory(spec, DriverNoise(), np.random.default_rng(1))
print("\nideal forward-5m endpoint:", np.round(ideal.active[-1], 3))
print("noisy forward-5m endpoint:", np.round(noisy.active[-1], 3))

# Implicit directives state the speaker's position; the robot comes over.
spec = CommandSpec(intent="implicit_locate", relation="behind", distance=3.0)
t = oracle_trajectory(spec, ZERO_NOISE, np.random.default_rng(2))
print("\n'I am standing behind you 3 meters' ->",
      np.round(t.active[-1], 3), "(turns to face its travel direction)")

# A dataset is just n of these pairs, deterministic per seed.
ds = generate_dataset(5, seed=7)
print(f"\n{len(ds)} samples:")
for s in ds.samples:
    print(f"  family {s.family_id}: {s.command!r} "
          f"(h={s.active_len}, endpoint {np.round(s.trajectory[s.active_len-1, :2], 2)})")
