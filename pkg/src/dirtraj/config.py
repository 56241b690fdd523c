"""Shared constants and hyperparameter defaults for the command-to-trajectory pipeline."""

from __future__ import annotations

# Trajectory capacity and spacing. 22 poses at 0.3 m spacing covers the 6 m
# command range with headroom for driver-noise distance scaling.
TRAJECTORY_CAPACITY = 22
STEP_SPACING_M = 0.3

# Arena geometry (shared by normalization and the guidance service).
ARENA_HALF_EXTENT_M = 8.0

# Evaluation.
SUCCESS_THRESHOLD_M = 0.10
RESAMPLE_POINTS = 22
GOAL_RADIUS_M = 1.0

# Heading weight of the SE(2) displacement norm, meters per radian. Pure
# rotations count as motion so in-place turns are not truncated away.
HEADING_WEIGHT_M_PER_RAD = 1.0

# Adaptive trajectory-length termination.
ATLD_WINDOW = 7
ATLD_EPSILON = 0.03

# Diffusion schedule.
DIFFUSION_STEPS = 50
BETA_START = 1e-4
BETA_END = 0.02

# Training defaults.
BATCH_SIZE = 64
EPOCHS = 30
LR_START = 1e-4
LR_PEAK = 2e-3
WARMUP_FRACTION = 0.1
WEIGHT_DECAY = 1.25e-6

# Augmentation. Paraphrase count defaults to 30; desk-scale experiments use 8
# to bound runtime.
PARAPHRASE_COUNT = 30
DESK_PARAPHRASE_COUNT = 8

# Encoder / denoiser architecture defaults.
ENCODER_DIM = 64
ENCODER_BLOCKS = 2
ENCODER_HEADS = 4
ENCODER_MAX_TOKENS = 24
DENOISER_WIDTH = 128
DENOISER_BLOCKS = 3
DENOISER_HEADS = 4
