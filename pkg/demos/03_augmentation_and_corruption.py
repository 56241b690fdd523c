"""Paraphrase augmentation and the three robustness corruptions.

Run:  python3 demos/03_augmentation_and_corruption.py
"""

import numpy as np

from dirtraj import CorruptionMode, augment_dataset, corrupt, generate_dataset, paraphrase

rng = np.random.default_rng(0)

# The paraphraser re-realizes a parsed command through the surface grammar,
# so every rewrite provably keeps the intent.
for source in ("Move forward 5 meters", "Move 4 meters to the left", "Turn slightly right"):
    outs = paraphrase(source, 5, rng)
    print(f"{source}:")
    for o in outs:
        print(f"    {o}")

# Augmenting a dataset grows it to n*(k+1): each original keeps its family id
# and every paraphrase shares the original's trajectory label.
ds = generate_dataset(100, seed=1)
aug, rejects = augment_dataset(ds, k=8, seed=2)
print(f"\naugmented {len(ds)} -> {len(aug)} samples, rejects: {len(rejects)}")

# Corruptions emulate a noisy speech channel.
cmd = "move forward five meters"
print(f"\ncorrupting {cmd!r}:")
for mode in CorruptionMode:
    outs = {corrupt(cmd, mode, np.random.default_rng(s)) for s in range(6)}
    print(f"  {mode.value}:")
    for o in sorted(outs):
        print(f"      {o}")
