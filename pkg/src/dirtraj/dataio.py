"""Bit-exact persistence: datasets as JSON lines, checkpoints as binary.

Dataset files carry one sample object per line with exactly the fields
command, trajectory, active_len, source, family_id; numbers serialize with
full round-trip precision. Checkpoints store a JSON header (format version,
architecture, vocabulary, normalization stats, schedule, seeds) followed by
named little-endian float64 tensors.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import json
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from .atld import AtldConfig
from .config import TRAJECTORY_CAPACITY
from .diffusion import NormalizationStats, ScheduleConfig
from .encoder import EncoderConfig, make_encoder
from .policy import DenoiserConfig, NoiseDenoiser, PolicyParameters
from .text import SynonymTable, Vocabulary


class SchemaError(ValueError):
    """Malformed dataset file content."""


class CheckpointError(RuntimeError):
    """Unreadable, truncated, or incompatible checkpoint."""


@dataclass
class LabeledSample:
    """One (command, trajectory) pair."""

    command: str
    trajectory: np.ndarray  # (capacity, 3) rows of (x, y, theta)
    active_len: int
    source: str = "synthetic"  # human_sim | synthetic | augmented
    family_id: int = 0
    standardized: str | None = None  # in-memory cache, never persisted

    def __post_init__(self):
        self.trajectory = np.asarray(self.trajectory, dtype=np.float64)
        if self.trajectory.ndim != 2 or self.trajectory.shape[1] != 3:
            raise SchemaError(f"trajectory must be (n, 3), got {self.trajectory.shape}")
        if not 1 <= self.active_len <= self.trajectory.shape[0]:
            raise SchemaError(f"active_len {self.active_len} out of range")
        if self.source not in ("human_sim", "synthetic", "augmented"):
            raise SchemaError(f"unknown source {self.source!r}")

    def __eq__(self, other):
        return (
            isinstance(other, LabeledSample)
            and self.command == other.command
            and self.active_len == other.active_len
            and self.source == other.source
            and self.family_id == other.family_id
            and np.array_equal(self.trajectory, other.trajectory)
        )


@dataclass
class Dataset:
    samples: list[LabeledSample] = field(default_factory=list)

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __eq__(self, other):
        return isinstance(other, Dataset) and self.samples == other.samples


def write_dataset(ds: Dataset, path):
    with open(path, "w", encoding="utf-8") as fh:
        for s in ds.samples:
            fh.write(json.dumps({
                "command": s.command,
                "trajectory": [list(row) for row in s.trajectory.tolist()],
                "active_len": s.active_len,
                "source": s.source,
                "family_id": s.family_id,
            }) + "\n")


def read_dataset(path, capacity: int = TRAJECTORY_CAPACITY) -> Dataset:
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaError(f"line {lineno}: invalid JSON ({e.msg})") from e
            try:
                traj = obj["trajectory"]
                if capacity is not None and len(traj) != capacity:
                    raise SchemaError(
                        f"line {lineno}: expected {capacity} pose rows, got {len(traj)}"
                    )
                if any(len(row) != 3 for row in traj):
                    raise SchemaError(f"line {lineno}: pose rows must have 3 entries")
                samples.append(LabeledSample(
                    command=obj["command"],
                    trajectory=np.array(traj, dtype=np.float64),
                    active_len=int(obj["active_len"]),
                    source=obj["source"],
                    family_id=int(obj["family_id"]),
                ))
            except SchemaError:
                raise
            except (KeyError, TypeError, ValueError) as e:
                raise SchemaError(f"line {lineno}: {e}") from e
    return Dataset(samples)


# ---------------------------------------------------------------------------
# Checkpoints

_MAGIC = b"DIRTRAJ1"
_FORMAT_VERSION = 1


def _policy_header(policy: PolicyParameters) -> dict:
    return {
        "format_version": _FORMAT_VERSION,
        "architecture": {
            "encoder": asdict(policy.encoder.config),
            "denoiser": asdict(policy.denoiser.config),
        },
        "vocabulary": list(policy.vocab.id_to_token),
        "normalization": {"xy_scale": policy.norm.xy_scale},
        "schedule": {
            "steps": policy.schedule_config.steps,
            "beta_start": policy.schedule_config.beta_start,
            "beta_end": policy.schedule_config.beta_end,
        },
        "atld": {"window": policy.atld.window, "epsilon": policy.atld.epsilon},
        "flags": {
            "standardize": policy.standardize_enabled,
            "use_atld": policy.use_atld,
            "encoder_kind": policy.encoder.config.kind,
        },
        "training_seed": policy.seed,
        "dtype": str(np.dtype(policy.dtype)),
        "synonyms": policy.synonyms.to_lines(),
    }


def save_checkpoint(policy: PolicyParameters, path):
    tensors = {f"encoder.{k}": v.data for k, v in policy.encoder.params.items()}
    tensors.update({f"denoiser.{k}": v.data for k, v in policy.denoiser.params.items()})
    header = json.dumps(_policy_header(policy)).encode("utf-8")
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<IQ", _FORMAT_VERSION, len(header)))
    buf.write(header)
    buf.write(struct.pack("<I", len(tensors)))
    for name, arr in tensors.items():
        nb = name.encode("utf-8")
        buf.write(struct.pack("<H", len(nb)))
        buf.write(nb)
        buf.write(struct.pack("<B", arr.ndim))
        for d in arr.shape:
            buf.write(struct.pack("<Q", d))
        buf.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CheckpointError(f"truncated checkpoint while reading {what}")
    return data


def read_checkpoint_header(path) -> dict:
    """Inspect architecture and metadata without loading tensors."""
    with open(path, "rb") as fh:
        magic = _read_exact(fh, len(_MAGIC), "magic")
        if magic != _MAGIC:
            raise CheckpointError("not a policy checkpoint (bad magic)")
        version, hlen = struct.unpack("<IQ", _read_exact(fh, 12, "version"))
        if version != _FORMAT_VERSION:
            raise CheckpointError(
                f"incompatible checkpoint format version {version}, "
                f"expected {_FORMAT_VERSION}"
            )
        try:
            return json.loads(_read_exact(fh, hlen, "header"))
        except json.JSONDecodeError as e:
            raise CheckpointError("corrupt checkpoint header") from e


def load_checkpoint(path) -> PolicyParameters:
    header = read_checkpoint_header(path)
    with open(path, "rb") as fh:
        _read_exact(fh, len(_MAGIC), "magic")
        _, hlen = struct.unpack("<IQ", _read_exact(fh, 12, "version"))
        _read_exact(fh, hlen, "header")
        (count,) = struct.unpack("<I", _read_exact(fh, 4, "tensor count"))
        tensors = {}
        for _ in range(count):
            (nlen,) = struct.unpack("<H", _read_exact(fh, 2, "tensor name length"))
            name = _read_exact(fh, nlen, "tensor name").decode("utf-8")
            (ndim,) = struct.unpack("<B", _read_exact(fh, 1, "tensor rank"))
            shape = tuple(
                struct.unpack("<Q", _read_exact(fh, 8, "tensor shape"))[0]
                for _ in range(ndim)
            )
            size = int(np.prod(shape)) if shape else 1
            raw = _read_exact(fh, size * 8, f"tensor {name}")
            tensors[name] = np.frombuffer(raw, dtype="<f8").reshape(shape)

    dtype = np.dtype(header["dtype"])
    arch = header["architecture"]
    vocab_tokens = tuple(header["vocabulary"])
    vocab = Vocabulary(
        token_to_id={t: i for i, t in enumerate(vocab_tokens)},
        id_to_token=vocab_tokens,
    )
    enc_cfg = EncoderConfig(**arch["encoder"])
    den_cfg = DenoiserConfig(**arch["denoiser"])
    rng = np.random.default_rng(0)
    encoder = make_encoder(enc_cfg, rng, dtype)
    denoiser = NoiseDenoiser(den_cfg, rng, dtype)
    try:
        encoder.params.load_arrays(
            {k[len("encoder."):]: v for k, v in tensors.items() if k.startswith("encoder.")}
        )
        denoiser.params.load_arrays(
            {k[len("denoiser."):]: v for k, v in tensors.items() if k.startswith("denoiser.")}
        )
    except KeyError as e:
        raise CheckpointError(f"checkpoint missing tensor {e}") from e
    return PolicyParameters(
        encoder=encoder,
        denoiser=denoiser,
        vocab=vocab,
        norm=NormalizationStats(xy_scale=header["normalization"]["xy_scale"]),
        schedule_config=ScheduleConfig(**header["schedule"]),
        synonyms=SynonymTable.from_lines(header["synonyms"]),
        standardize_enabled=header["flags"]["standardize"],
        use_atld=header["flags"]["use_atld"],
        atld=AtldConfig(**header["atld"]),
        seed=header["training_seed"],
    )


def checkpoint_hash(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# Config files: INI-style key = value sections


def load_config_file(path) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser()
    with open(path, "r", encoding="utf-8") as fh:
        parser.read_file(fh)
    return {section: dict(parser[section]) for section in parser.sections()}


def save_config_file(sections: dict[str, dict], path):
    parser = configparser.ConfigParser()
    for section, values in sections.items():
        parser[section] = {k: str(v) for k, v in values.items()}
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)
