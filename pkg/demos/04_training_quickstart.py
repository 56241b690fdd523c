"""Train a small policy end to end and evaluate it.

This is a fast, shrunken run (a few minutes). The full desk-scale recipe
(2000 originals, k=8, 30 epochs, default architecture) lives in the
acceptance suite and the README.

Run:  python3 demos/04_training_quickstart.py
"""

from dirtraj import (
    Trajectory,
    aggregate,
    augment_dataset,
    evaluate,
    generate_dataset,
    sample_batch,
    save_checkpoint,
    train,
)
from dirtraj.training import TrainConfig

ds = generate_dataset(400, seed=11)
aug, _ = augment_dataset(ds, k=4, seed=12)
print(f"training on {len(aug)} samples")

cfg = TrainConfig(epochs=8, batch_size=64, seed=0, val_count=12)
policy, history = train(aug, cfg, log=print)

print("\nloss trajectory:", [round(h.loss, 3) for h in history])

# Evaluate reconstruction on a slice of the training distribution.
schedule = policy.make_schedule()
subset = aug.samples[:64]
gens = sample_batch(policy, schedule, [s.command for s in subset], seed=999)
refs = [Trajectory(s.trajectory, s.active_len) for s in subset]
summary = aggregate([evaluate(g, r) for g, r in zip(gens, refs)])
print(f"\nSR {summary.sr_percent:.1f}%  "
      f"RMSE {summary.rmse_mean_cm:.1f} +/- {summary.rmse_std_cm:.1f} cm  "
      f"MAOE {summary.maoe_mean_deg:.2f} +/- {summary.maoe_std_deg:.2f} deg")

save_checkpoint(policy, "quickstart.ckpt")
print("\nsaved quickstart.ckpt (used by demos 05 and 06)")
