"""Joint training of the text encoder and the noise-prediction network.

The loss is mean squared error between the drawn forward-process noise and
the network's estimate at a random step per sample. Learning rate warms
linearly over the first tenth of the steps and then holds; weight decay is
decoupled. Validation reconstructs a held-out slice by full sampling and
tracks positional RMSE / orientation error.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import nn
from .config import (
    BATCH_SIZE,
    BETA_END,
    BETA_START,
    DIFFUSION_STEPS,
    EPOCHS,
    LR_PEAK,
    LR_START,
    WARMUP_FRACTION,
    WEIGHT_DECAY,
)
from .diffusion import NormalizationStats, ScheduleConfig, make_schedule, normalize_trajectory
from .encoder import EncoderConfig, make_encoder
from .geometry import Trajectory
from .metrics import aggregate, evaluate
from .nn import AdamW, ParameterStore, Tensor
from .policy import DenoiserConfig, NoiseDenoiser, PolicyParameters, sample_batch
from .text import build_vocabulary, load_default_synonyms, plain_tokens, standardize, tokenize


@dataclass
class TrainConfig:
    epochs: int = EPOCHS
    batch_size: int = BATCH_SIZE
    lr_start: float = LR_START
    lr_peak: float = LR_PEAK
    warmup_fraction: float = WARMUP_FRACTION
    weight_decay: float = WEIGHT_DECAY
    seed: int = 0
    dtype: str = "float32"
    standardize: bool = True
    use_atld: bool = True
    encoder_kind: str = "transformer"
    encoder_dim: int = 64
    encoder_blocks: int = 2
    encoder_heads: int = 4
    denoiser_width: int = 128
    denoiser_blocks: int = 3
    denoiser_heads: int = 4
    diffusion_steps: int = DIFFUSION_STEPS
    beta_start: float = BETA_START
    beta_end: float = BETA_END
    xy_scale: float = 8.0
    val_count: int = 16
    log_every: int = 0  # batches; 0 disables intra-epoch logging
    # exponential moving average of weights, applied at the end of training;
    # negative = auto (window of total_steps/8), 0 disables
    ema_decay: float = -1.0


@dataclass
class EpochStats:
    epoch: int
    loss: float
    val_rmse_cm: float
    val_maoe_deg: float
    lr: float
    seconds: float


class TrainingDiverged(RuntimeError):
    """Raised when the loss stops being finite."""


def build_policy(vocab, cfg: TrainConfig, synonyms=None) -> PolicyParameters:
    """Fresh, untrained parameters matching a training configuration."""
    dtype = np.dtype(cfg.dtype)
    ss = np.random.SeedSequence(cfg.seed)
    enc_ss, den_ss = ss.spawn(2)
    enc_cfg = EncoderConfig(
        vocab_size=vocab.size,
        d_model=cfg.encoder_dim,
        n_blocks=cfg.encoder_blocks,
        n_heads=cfg.encoder_heads,
        kind=cfg.encoder_kind,
    )
    den_cfg = DenoiserConfig(
        width=cfg.denoiser_width,
        n_blocks=cfg.denoiser_blocks,
        n_heads=cfg.denoiser_heads,
        cond_dim=cfg.encoder_dim,
    )
    return PolicyParameters(
        encoder=make_encoder(enc_cfg, np.random.default_rng(enc_ss), dtype),
        denoiser=NoiseDenoiser(den_cfg, np.random.default_rng(den_ss), dtype),
        vocab=vocab,
        norm=NormalizationStats(xy_scale=cfg.xy_scale),
        schedule_config=ScheduleConfig(cfg.diffusion_steps, cfg.beta_start, cfg.beta_end),
        synonyms=load_default_synonyms() if synonyms is None else synonyms,
        standardize_enabled=cfg.standardize,
        use_atld=cfg.use_atld,
        seed=cfg.seed,
    )


def _group_by_length(indices, token_ids):
    groups: dict[int, list[int]] = {}
    for i in indices:
        groups.setdefault(len(token_ids[i]), []).append(i)
    return list(groups.values())


def train(dataset, cfg: TrainConfig = TrainConfig(), log=None):
    """Train a policy on a labeled dataset; returns (policy, history)."""
    if len(dataset.samples) == 0:
        raise ValueError("cannot train on an empty dataset")
    dtype = np.dtype(cfg.dtype)

    # vocabulary comes from the training corpus in its trained form
    if cfg.standardize:
        synonyms = load_default_synonyms()
        corpus = [standardize(s.command, synonyms) for s in dataset.samples]
    else:
        synonyms = load_default_synonyms()
        corpus = [plain_tokens(s.command) for s in dataset.samples]
    vocab = build_vocabulary(corpus)
    policy = build_policy(vocab, cfg, synonyms)
    max_tokens = policy.encoder.config.max_tokens
    token_ids = [tokenize(t, vocab)[:max_tokens] for t in corpus]

    tau0 = np.stack([
        normalize_trajectory(Trajectory(s.trajectory, s.active_len), policy.norm)
        for s in dataset.samples
    ]).astype(dtype)

    schedule = make_schedule(cfg.diffusion_steps, cfg.beta_start, cfg.beta_end)
    sqrt_ab = np.sqrt(schedule.abar).astype(dtype)
    sqrt_1mab = np.sqrt(1.0 - schedule.abar).astype(dtype)

    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0xD1F0)))
    n = len(dataset.samples)
    val_count = min(cfg.val_count, max(0, n - cfg.batch_size))
    order = rng.permutation(n)
    val_idx = order[:val_count]
    train_idx = order[val_count:]

    params = ParameterStore()
    for k, v in policy.encoder.params.items():
        params[f"encoder.{k}"] = v
    for k, v in policy.denoiser.params.items():
        params[f"denoiser.{k}"] = v
    opt = AdamW(params, weight_decay=cfg.weight_decay)

    steps_per_epoch = max(1, math.ceil(len(train_idx) / cfg.batch_size))
    total_steps = cfg.epochs * steps_per_epoch
    warmup = max(1, int(round(cfg.warmup_fraction * total_steps)))

    ema_decay = cfg.ema_decay
    if ema_decay < 0:
        ema_decay = max(0.9, 1.0 - 8.0 / total_steps)
    ema = {k: v.data.copy() for k, v in params.items()} if ema_decay > 0 else None

    def lr_at(step: int) -> float:
        if step >= warmup:
            return cfg.lr_peak
        return cfg.lr_start + (cfg.lr_peak - cfg.lr_start) * step / warmup

    dim = tau0.shape[1]
    history: list[EpochStats] = []
    step = 0
    last_grad_norm = float("nan")
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        perm = rng.permutation(train_idx)
        if len(perm) < cfg.batch_size:
            # tiny datasets: fill the batch by resampling so each step still
            # averages batch_size independent (step, noise) draws
            perm = rng.choice(train_idx, size=cfg.batch_size, replace=True)
        losses = []
        for start in range(0, len(perm), cfg.batch_size):
            batch = perm[start : start + cfg.batch_size]
            bsz = len(batch)
            ks = rng.integers(1, schedule.steps + 1, size=bsz)
            eps = rng.standard_normal((bsz, dim)).astype(dtype)
            tk = (sqrt_ab[ks - 1, None] * tau0[batch]
                  + sqrt_1mab[ks - 1, None] * eps)

            params.zero_grads()
            lr = lr_at(step)
            # encoder runs per equal-length group (full unmasked attention,
            # no padding); the denoiser runs once on the whole batch
            parts, rows = [], []
            for group in _group_by_length(range(bsz), [token_ids[i] for i in batch]):
                idx = np.asarray(group)
                ids = np.asarray([token_ids[batch[i]] for i in group])
                _, pooled = policy.encoder.forward(ids)
                parts.append(pooled)
                rows.append(idx)
            cond = nn.scatter_rows(parts, rows, bsz)
            eps_hat = policy.denoiser.forward(tk, ks, cond)
            diff = eps_hat - Tensor(eps)
            loss = (diff * diff).sum() * (1.0 / (bsz * dim))
            loss_val = float(loss.data)
            if not np.isfinite(loss_val):
                raise TrainingDiverged(
                    f"non-finite loss at step {step} (lr={lr:.2e}, "
                    f"last grad norm={last_grad_norm:.3e})"
                )
            nn.backward(loss)
            last_grad_norm = opt.grad_norm()
            opt.step(lr)
            if ema is not None:
                for name, p in params.items():
                    shadow = ema[name]
                    shadow *= ema_decay
                    shadow += (1.0 - ema_decay) * p.data
            losses.append(loss_val)
            step += 1
            if cfg.log_every and log and step % cfg.log_every == 0:
                log(f"step {step}/{total_steps} loss {loss_val:.5f} lr {lr:.2e}")

        val_rmse = float("nan")
        val_maoe = float("nan")
        if val_count:
            refs = [
                Trajectory(dataset.samples[i].trajectory, dataset.samples[i].active_len)
                for i in val_idx
            ]
            gens = sample_batch(
                policy, schedule,
                [dataset.samples[i].command for i in val_idx],
                seed=cfg.seed + 7_000_000 + epoch,
            )
            summary = aggregate([evaluate(g, r) for g, r in zip(gens, refs)])
            val_rmse = summary.rmse_mean_cm
            val_maoe = summary.maoe_mean_deg
        stats = EpochStats(
            epoch=epoch,
            loss=float(np.mean(losses)),
            val_rmse_cm=val_rmse,
            val_maoe_deg=val_maoe,
            lr=lr_at(step - 1),
            seconds=time.perf_counter() - t0,
        )
        history.append(stats)
        if log:
            log(
                f"epoch {epoch + 1}/{cfg.epochs} loss {stats.loss:.5f} "
                f"val_rmse {stats.val_rmse_cm:.1f}cm val_maoe {stats.val_maoe_deg:.2f}deg "
                f"({stats.seconds:.1f}s)"
            )
    if ema is not None:
        for name, p in params.items():
            p.data = ema[name]
    return policy, history


def history_to_dicts(history) -> list[dict]:
    return [asdict(h) for h in history]


def default_config_sections() -> dict[str, dict]:
    """All hyperparameters with their defaults, grouped for a config file."""
    cfg = TrainConfig()
    groups = {
        "training": ("epochs", "batch_size", "lr_start", "lr_peak",
                     "warmup_fraction", "weight_decay", "seed", "dtype",
                     "ema_decay", "val_count"),
        "pipeline": ("standardize", "use_atld", "encoder_kind"),
        "architecture": ("encoder_dim", "encoder_blocks", "encoder_heads",
                         "denoiser_width", "denoiser_blocks", "denoiser_heads"),
        "diffusion": ("diffusion_steps", "beta_start", "beta_end", "xy_scale"),
    }
    return {
        section: {name: getattr(cfg, name) for name in names}
        for section, names in groups.items()
    }
