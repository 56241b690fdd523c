"""dirtraj: text commands to SE(2) motion trajectories via a conditional diffusion policy."""

from .atld import AtldConfig, determine_length
from .augment import CorruptionMode, augment_dataset, corrupt, external_paraphrase, paraphrase
from .dataio import (
    CheckpointError,
    Dataset,
    LabeledSample,
    SchemaError,
    load_checkpoint,
    read_checkpoint_header,
    read_dataset,
    save_checkpoint,
    write_dataset,
)
from .diffusion import (
    NoiseSchedule,
    NormalizationStats,
    ScheduleConfig,
    denoise_step,
    denormalize_trajectory,
    forward_corrupt,
    make_schedule,
    normalize_trajectory,
)
from .geometry import (
    Pose2,
    Trajectory,
    angular_difference,
    arc_length,
    resample,
    se2_compose,
    to_start_frame,
    transform_trajectory,
    weighted_displacement,
    wrap_angle,
)
from .grammar import CommandSpec, UnparseableCommand, parse_command, render, sample_spec
from .metrics import EvalResult, EvalSummary, aggregate, evaluate
from .policy import PolicyParameters, embed_command, predict_noise, sample, sample_batch
from .synth import DriverNoise, ZERO_NOISE, generate_dataset, oracle_trajectory
from .text import (
    Command,
    EmptyCommandError,
    SynonymTable,
    Vocabulary,
    build_vocabulary,
    load_default_synonyms,
    standardize,
    tokenize,
)
from .training import EpochStats, TrainConfig, train

__version__ = "0.1.0"

__all__ = [
    "AtldConfig", "determine_length",
    "CorruptionMode", "augment_dataset", "corrupt", "external_paraphrase", "paraphrase",
    "CheckpointError", "Dataset", "LabeledSample", "SchemaError",
    "load_checkpoint", "read_checkpoint_header", "read_dataset",
    "save_checkpoint", "write_dataset",
    "NoiseSchedule", "NormalizationStats", "ScheduleConfig",
    "denoise_step", "denormalize_trajectory", "forward_corrupt",
    "make_schedule", "normalize_trajectory",
    "Pose2", "Trajectory", "angular_difference", "arc_length", "resample",
    "se2_compose", "to_start_frame", "transform_trajectory",
    "weighted_displacement", "wrap_angle",
    "CommandSpec", "UnparseableCommand", "parse_command", "render", "sample_spec",
    "EvalResult", "EvalSummary", "aggregate", "evaluate",
    "PolicyParameters", "embed_command", "predict_noise", "sample", "sample_batch",
    "DriverNoise", "ZERO_NOISE", "generate_dataset", "oracle_trajectory",
    "Command", "EmptyCommandError", "SynonymTable", "Vocabulary",
    "build_vocabulary", "load_default_synonyms", "standardize", "tokenize",
    "EpochStats", "TrainConfig", "train",
]
