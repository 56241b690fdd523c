"""Conditional trajectory policy: noise-prediction network and sampling.

The denoiser is a transformer over pose tokens. Each of the H capacity
points becomes a token from its 4 normalized features; the projected pooled
command embedding and a sinusoidal embedding of the diffusion step index are
added to every token. Sampling runs the full ancestral loop, denormalizes,
rebases into the start frame, and (unless disabled) truncates with the
stationarity rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .atld import AtldConfig, determine_length
from .config import (
    DENOISER_BLOCKS,
    DENOISER_HEADS,
    DENOISER_WIDTH,
    ENCODER_DIM,
    TRAJECTORY_CAPACITY,
)
from .diffusion import (
    POINT_DIM,
    NoiseSchedule,
    NormalizationStats,
    ScheduleConfig,
    denormalize_trajectory,
    make_schedule,
)
from .encoder import (
    BagOfWordsEncoder,
    TextEncoder,
    init_transformer_block,
    transformer_block,
)
from .geometry import Trajectory, to_start_frame
from .nn import ParameterStore, Tensor
from .text import (
    Command,
    SynonymTable,
    Vocabulary,
    plain_tokens,
    standardize,
    tokenize,
)


@dataclass(frozen=True)
class DenoiserConfig:
    width: int = DENOISER_WIDTH
    n_blocks: int = DENOISER_BLOCKS
    n_heads: int = DENOISER_HEADS
    ffn_mult: int = 2
    horizon: int = TRAJECTORY_CAPACITY
    point_dim: int = POINT_DIM
    cond_dim: int = ENCODER_DIM

    def __post_init__(self):
        if self.width % self.n_heads != 0:
            raise ValueError("width must be divisible by n_heads")


def sinusoidal_embedding(k: np.ndarray, dim: int) -> np.ndarray:
    """Classic sin/cos embedding of integer step indices, shape (B, dim)."""
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half, dtype=np.float64) / max(half - 1, 1))
    ang = np.asarray(k, dtype=np.float64)[:, None] * freqs[None, :]
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)


class NoiseDenoiser:
    """Transformer epsilon-predictor over pose tokens."""

    def __init__(self, config: DenoiserConfig, rng: np.random.Generator,
                 dtype=np.float32):
        self.config = config
        self.dtype = np.dtype(dtype)
        w = config.width
        p = ParameterStore()
        p.add("in.w", nn.xavier(rng, config.point_dim, w, dtype))
        p.add("in.b", np.zeros(w, dtype=dtype))
        p.add("pos_emb", (0.02 * rng.standard_normal((config.horizon, w))).astype(dtype))
        p.add("cond.w", nn.xavier(rng, config.cond_dim, w, dtype))
        p.add("cond.b", np.zeros(w, dtype=dtype))
        p.add("step.w1", nn.xavier(rng, w, w, dtype))
        p.add("step.b1", np.zeros(w, dtype=dtype))
        p.add("step.w2", nn.xavier(rng, w, w, dtype))
        p.add("step.b2", np.zeros(w, dtype=dtype))
        for i in range(config.n_blocks):
            init_transformer_block(p, f"block{i}", w, config.ffn_mult, rng, dtype)
        p.add("ln_f.g", np.ones(w, dtype=dtype))
        p.add("ln_f.b", np.zeros(w, dtype=dtype))
        p.add("out.w", nn.xavier(rng, w, config.point_dim, dtype))
        p.add("out.b", np.zeros(config.point_dim, dtype=dtype))
        # step-modulated input skip and output gate: the epsilon target is
        # g(k)*tau - h(k)*clean(cond), with both gains blowing up as k -> 1;
        # carrying them in linear heads of the step embedding keeps the
        # transformer trunk at unit scale across all steps
        p.add("skip.w", np.zeros((w, config.point_dim), dtype=dtype))
        p.add("skip.b", np.zeros(config.point_dim, dtype=dtype))
        p.add("gate.w", np.zeros((w, config.point_dim), dtype=dtype))
        p.add("gate.b", np.ones(config.point_dim, dtype=dtype))
        self.params = p

    def forward(self, tau, k, cond) -> Tensor:
        """(B, 4H) noisy vectors + (B,) step indices + (B, cond_dim) -> (B, 4H)."""
        cfg = self.config
        t = tau if isinstance(tau, Tensor) else Tensor(np.asarray(tau, self.dtype))
        B = t.shape[0]
        if t.shape != (B, cfg.horizon * cfg.point_dim):
            raise ValueError(f"bad trajectory vector shape {t.shape}")
        c = cond if isinstance(cond, Tensor) else Tensor(np.asarray(cond, self.dtype))
        if c.shape != (B, cfg.cond_dim):
            raise ValueError(f"bad conditioning shape {c.shape}")
        p = self.params
        tokens_in = t.reshape(B, cfg.horizon, cfg.point_dim)
        x = tokens_in @ p["in.w"] + p["in.b"]
        x = x + p["pos_emb"]
        x = x + (c @ p["cond.w"] + p["cond.b"]).reshape(B, 1, cfg.width)
        semb = Tensor(sinusoidal_embedding(k, cfg.width).astype(self.dtype))
        s = nn.relu(semb @ p["step.w1"] + p["step.b1"]) @ p["step.w2"] + p["step.b2"]
        x = x + s.reshape(B, 1, cfg.width)
        for i in range(cfg.n_blocks):
            x = transformer_block(p, f"block{i}", x, cfg.n_heads)
        x = nn.layer_norm(x, p["ln_f.g"], p["ln_f.b"])
        film = (s @ p["skip.w"] + p["skip.b"]).reshape(B, 1, cfg.point_dim)
        gate = (s @ p["gate.w"] + p["gate.b"]).reshape(B, 1, cfg.point_dim)
        out = (x @ p["out.w"] + p["out.b"]) * gate + tokens_in * film
        return out.reshape(B, cfg.horizon * cfg.point_dim)


@dataclass
class PolicyParameters:
    """Everything needed to map raw text to a trajectory."""

    encoder: TextEncoder | BagOfWordsEncoder
    denoiser: NoiseDenoiser
    vocab: Vocabulary
    norm: NormalizationStats
    schedule_config: ScheduleConfig
    synonyms: SynonymTable
    standardize_enabled: bool = True
    use_atld: bool = True
    atld: AtldConfig = field(default_factory=AtldConfig)
    seed: int = 0

    @property
    def dtype(self):
        return self.denoiser.dtype

    def make_schedule(self) -> NoiseSchedule:
        c = self.schedule_config
        return make_schedule(c.steps, c.beta_start, c.beta_end)


def embed_command(policy: PolicyParameters, raw: str) -> Command:
    """Standardize (unless ablated), tokenize, and encode a raw command."""
    if policy.standardize_enabled:
        std = standardize(raw, policy.synonyms)
    else:
        std = plain_tokens(raw)
    tokens = tokenize(std, policy.vocab)
    per_token, pooled = policy.encoder.encode(tokens)
    return Command(raw=raw, standardized=std, tokens=tokens,
                   embedding=per_token, pooled=pooled)


def predict_noise(policy: PolicyParameters, pooled: np.ndarray,
                  tau_k: np.ndarray, k: int) -> np.ndarray:
    """Single-instance epsilon estimate for a noisy trajectory vector."""
    pooled = np.asarray(pooled)
    tau_k = np.asarray(tau_k)
    if pooled.ndim != 1 or tau_k.ndim != 1:
        raise ValueError("predict_noise expects 1-d pooled and tau_k vectors")
    out = policy.denoiser.forward(
        tau_k[None].astype(policy.dtype),
        np.array([k]),
        pooled[None].astype(policy.dtype),
    )
    return out.data[0].copy()


def _finish_trajectory(policy: PolicyParameters, tau: np.ndarray) -> Trajectory:
    traj = denormalize_trajectory(np.asarray(tau, dtype=np.float64), policy.norm)
    traj = to_start_frame(traj)
    if policy.use_atld:
        _, traj = determine_length(traj, policy.atld)
    return traj


def sample(policy: PolicyParameters, schedule: NoiseSchedule,
           command: str | Command, rng: np.random.Generator) -> Trajectory:
    """Generate one trajectory for a command; deterministic given the rng state."""
    cmd = command if isinstance(command, Command) else embed_command(policy, command)
    dim = policy.denoiser.config.horizon * policy.denoiser.config.point_dim
    dtype = policy.dtype
    tau = rng.standard_normal(dim).astype(dtype)
    cond = cmd.pooled[None].astype(dtype)
    for k in range(schedule.steps, 0, -1):
        eps_hat = policy.denoiser.forward(tau[None], np.array([k]), cond).data[0]
        mean = schedule.alpha[k - 1] * (tau - schedule.gamma[k - 1] * eps_hat)
        sig = schedule.sigma[k - 1]
        if sig > 0.0:
            mean = mean + sig * rng.standard_normal(dim)
        tau = mean.astype(dtype)
    return _finish_trajectory(policy, tau)


def sample_batch(policy: PolicyParameters, schedule: NoiseSchedule,
                 commands, seed: int) -> list[Trajectory]:
    """Vectorized sampling, one independent noise stream per command.

    Each command's stream derives from (seed, position), so results do not
    depend on how commands are batched together.
    """
    commands = list(commands)
    if not commands:
        return []
    cmds = [c if isinstance(c, Command) else embed_command(policy, c) for c in commands]
    dim = policy.denoiser.config.horizon * policy.denoiser.config.point_dim
    dtype = policy.dtype
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(len(cmds))]
    tau = np.stack([r.standard_normal(dim) for r in rngs]).astype(dtype)
    cond = np.stack([c.pooled for c in cmds]).astype(dtype)
    ks = np.empty(len(cmds), dtype=np.int64)
    for k in range(schedule.steps, 0, -1):
        ks[:] = k
        eps_hat = policy.denoiser.forward(tau, ks, cond).data
        mean = schedule.alpha[k - 1] * (tau - schedule.gamma[k - 1] * eps_hat)
        sig = schedule.sigma[k - 1]
        if sig > 0.0:
            noise = np.stack([r.standard_normal(dim) for r in rngs])
            mean = mean + sig * noise
        tau = mean.astype(dtype)
    return [_finish_trajectory(policy, row) for row in tau]
