"""Trainable bidirectional text encoders.

The default encoder is a small pre-norm transformer with full (unmasked)
self-attention and learned positional embeddings; the pooled command vector
is the mean of the per-token outputs. A bag-of-words variant (mean of token
embeddings, order-insensitive) serves as the contextual-embedding ablation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import nn
from .config import ENCODER_BLOCKS, ENCODER_DIM, ENCODER_HEADS, ENCODER_MAX_TOKENS
from .nn import ParameterStore, Tensor


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    d_model: int = ENCODER_DIM
    n_blocks: int = ENCODER_BLOCKS
    n_heads: int = ENCODER_HEADS
    ffn_mult: int = 2
    max_tokens: int = ENCODER_MAX_TOKENS
    kind: str = "transformer"  # "transformer" | "bag_of_words"

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")
        if self.kind not in ("transformer", "bag_of_words"):
            raise ValueError(f"unknown encoder kind: {self.kind}")


def init_transformer_block(params: ParameterStore, prefix: str, width: int,
                           ffn_mult: int, rng: np.random.Generator, dtype):
    f = width * ffn_mult
    for name in ("wq", "wk", "wv", "wo"):
        params.add(f"{prefix}.{name}", nn.xavier(rng, width, width, dtype))
        params.add(f"{prefix}.b{name[1]}", np.zeros(width, dtype=dtype))
    # residual branches start near-silent: scale down the output projections
    # so the stream is close to identity at init (stabilizes small-data runs)
    params[f"{prefix}.wo"].data *= 0.1
    params.add(f"{prefix}.ln1.g", np.ones(width, dtype=dtype))
    params.add(f"{prefix}.ln1.b", np.zeros(width, dtype=dtype))
    params.add(f"{prefix}.ln2.g", np.ones(width, dtype=dtype))
    params.add(f"{prefix}.ln2.b", np.zeros(width, dtype=dtype))
    params.add(f"{prefix}.ffn.w1", nn.xavier(rng, width, f, dtype))
    params.add(f"{prefix}.ffn.b1", np.zeros(f, dtype=dtype))
    params.add(f"{prefix}.ffn.w2", nn.xavier(rng, f, width, dtype))
    params[f"{prefix}.ffn.w2"].data *= 0.1
    params.add(f"{prefix}.ffn.b2", np.zeros(width, dtype=dtype))


def transformer_block(params: ParameterStore, prefix: str, x: Tensor, n_heads: int) -> Tensor:
    """Pre-norm self-attention + feed-forward with residual connections."""
    B, T, D = x.shape
    dh = D // n_heads

    h = nn.layer_norm(x, params[f"{prefix}.ln1.g"], params[f"{prefix}.ln1.b"])
    q = h @ params[f"{prefix}.wq"] + params[f"{prefix}.bq"]
    k = h @ params[f"{prefix}.wk"] + params[f"{prefix}.bk"]
    v = h @ params[f"{prefix}.wv"] + params[f"{prefix}.bv"]
    q = q.reshape(B, T, n_heads, dh).transpose(0, 2, 1, 3)
    k = k.reshape(B, T, n_heads, dh).transpose(0, 2, 1, 3)
    v = v.reshape(B, T, n_heads, dh).transpose(0, 2, 1, 3)
    scores = (q @ k.transpose(0, 1, 3, 2)) * (1.0 / np.sqrt(dh))
    att = nn.softmax(scores)
    ctx = (att @ v).transpose(0, 2, 1, 3).reshape(B, T, D)
    x = x + (ctx @ params[f"{prefix}.wo"] + params[f"{prefix}.bo"])

    h2 = nn.layer_norm(x, params[f"{prefix}.ln2.g"], params[f"{prefix}.ln2.b"])
    ff = nn.relu(h2 @ params[f"{prefix}.ffn.w1"] + params[f"{prefix}.ffn.b1"])
    return x + (ff @ params[f"{prefix}.ffn.w2"] + params[f"{prefix}.ffn.b2"])


class TextEncoder:
    """Bidirectional contextual encoder over token-id sequences."""

    def __init__(self, config: EncoderConfig, rng: np.random.Generator,
                 dtype=np.float32):
        self.config = config
        self.dtype = np.dtype(dtype)
        p = ParameterStore()
        d = config.d_model
        p.add("tok_emb", (0.02 * rng.standard_normal((config.vocab_size, d))).astype(dtype))
        p.add("pos_emb", (0.02 * rng.standard_normal((config.max_tokens, d))).astype(dtype))
        for i in range(config.n_blocks):
            init_transformer_block(p, f"block{i}", d, config.ffn_mult, rng, dtype)
        p.add("ln_f.g", np.ones(d, dtype=dtype))
        p.add("ln_f.b", np.zeros(d, dtype=dtype))
        self.params = p

    def forward(self, ids: np.ndarray) -> tuple[Tensor, Tensor]:
        """Encode a (B, m) id batch -> ((B, m, d) per-token, (B, d) pooled).

        All rows must share one length m <= max_tokens; batching never pads,
        so attention is always full and unmasked.
        """
        ids = np.asarray(ids, dtype=np.int64)
        if ids.ndim != 2:
            raise ValueError("forward expects a (B, m) id array")
        m = ids.shape[1]
        if not 1 <= m <= self.config.max_tokens:
            raise ValueError(f"sequence length {m} outside [1, {self.config.max_tokens}]")
        x = nn.embedding(self.params["tok_emb"], ids)
        x = x + nn.embedding(self.params["pos_emb"], np.arange(m))
        for i in range(self.config.n_blocks):
            x = transformer_block(self.params, f"block{i}", x, self.config.n_heads)
        per_token = nn.layer_norm(x, self.params["ln_f.g"], self.params["ln_f.b"])
        pooled = per_token.mean(axis=1)
        return per_token, pooled

    def encode(self, token_ids) -> tuple[np.ndarray, np.ndarray]:
        """Single-sequence inference: returns (m, d) per-token and (d,) pooled."""
        token_ids = list(token_ids)
        if len(token_ids) == 0:
            raise ValueError("cannot encode an empty token sequence")
        if len(token_ids) > self.config.max_tokens:
            warnings.warn(
                f"sequence of {len(token_ids)} tokens truncated to {self.config.max_tokens}",
                stacklevel=2,
            )
            token_ids = token_ids[: self.config.max_tokens]
        per_token, pooled = self.forward(np.asarray([token_ids]))
        return per_token.data[0].copy(), pooled.data[0].copy()


class BagOfWordsEncoder:
    """Order-insensitive mean of token embeddings (contextual-encoder ablation)."""

    def __init__(self, config: EncoderConfig, rng: np.random.Generator,
                 dtype=np.float32):
        self.config = config
        self.dtype = np.dtype(dtype)
        p = ParameterStore()
        p.add("tok_emb", (0.02 * rng.standard_normal(
            (config.vocab_size, config.d_model))).astype(dtype))
        self.params = p

    def forward(self, ids: np.ndarray) -> tuple[Tensor, Tensor]:
        ids = np.asarray(ids, dtype=np.int64)
        per_token = nn.embedding(self.params["tok_emb"], ids)
        pooled = per_token.mean(axis=1)
        return per_token, pooled

    def encode(self, token_ids) -> tuple[np.ndarray, np.ndarray]:
        token_ids = list(token_ids)
        if len(token_ids) == 0:
            raise ValueError("cannot encode an empty token sequence")
        if len(token_ids) > self.config.max_tokens:
            warnings.warn(
                f"sequence of {len(token_ids)} tokens truncated to {self.config.max_tokens}",
                stacklevel=2,
            )
            token_ids = token_ids[: self.config.max_tokens]
        per_token, pooled = self.forward(np.asarray([token_ids]))
        return per_token.data[0].copy(), pooled.data[0].copy()


def make_encoder(config: EncoderConfig, rng: np.random.Generator, dtype=np.float32):
    if config.kind == "bag_of_words":
        return BagOfWordsEncoder(config, rng, dtype)
    return TextEncoder(config, rng, dtype)
