import json
import struct

import numpy as np
import pytest

from dirtraj.dataio import (
    CheckpointError,
    Dataset,
    LabeledSample,
    SchemaError,
    checkpoint_hash,
    load_checkpoint,
    load_config_file,
    read_checkpoint_header,
    read_dataset,
    save_checkpoint,
    save_config_file,
    write_dataset,
)
from dirtraj.policy import sample
from dirtraj.synth import generate_dataset
from dirtraj.training import TrainConfig, build_policy
from dirtraj.text import build_vocabulary


def tiny_policy():
    vocab = build_vocabulary(["move forward 5 meters", "turn slightly right"])
    cfg = TrainConfig(encoder_dim=16, encoder_blocks=1, encoder_heads=2,
                      denoiser_width=32, denoiser_blocks=1, denoiser_heads=2,
                      diffusion_steps=8, seed=3)
    return build_policy(vocab, cfg)


def test_empty_dataset_round_trip(tmp_path):
    path = tmp_path / "empty.jsonl"
    write_dataset(Dataset([]), path)
    assert read_dataset(path) == Dataset([])
    assert path.read_text() == ""


def test_dataset_round_trip_bit_exact(tmp_path):
    ds = generate_dataset(25, seed=13)
    path = tmp_path / "ds.jsonl"
    write_dataset(ds, path)
    back = read_dataset(path)
    assert back == ds
    for a, b in zip(back.samples, ds.samples):
        assert np.array_equal(a.trajectory, b.trajectory)  # bit-exact floats
    # byte-identical on rewrite
    path2 = tmp_path / "ds2.jsonl"
    write_dataset(back, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_dataset_ordering_preserved(tmp_path):
    ds = generate_dataset(10, seed=1)
    path = tmp_path / "ds.jsonl"
    write_dataset(ds, path)
    back = read_dataset(path)
    assert [s.command for s in back.samples] == [s.command for s in ds.samples]


def test_wrong_pose_row_count_names_line(tmp_path):
    sample_obj = {
        "command": "move forward 2 meters",
        "trajectory": [[0.0, 0.0, 0.0]] * 21,  # 21 rows instead of 22
        "active_len": 5,
        "source": "synthetic",
        "family_id": 0,
    }
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps(sample_obj) + "\n")
    with pytest.raises(SchemaError, match="line 1"):
        read_dataset(path)


def test_malformed_json_names_line(tmp_path):
    ds = generate_dataset(2, seed=0)
    path = tmp_path / "bad.jsonl"
    write_dataset(ds, path)
    with open(path, "a") as fh:
        fh.write("{not json\n")
    with pytest.raises(SchemaError, match="line 3"):
        read_dataset(path)


def test_wrong_row_arity_is_schema_error(tmp_path):
    sample_obj = {
        "command": "x y",
        "trajectory": [[0.0, 0.0]] * 22,
        "active_len": 1,
        "source": "synthetic",
        "family_id": 0,
    }
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps(sample_obj) + "\n")
    with pytest.raises(SchemaError, match="3 entries"):
        read_dataset(path)


def test_labeled_sample_validation():
    with pytest.raises(SchemaError):
        LabeledSample("c", np.zeros((3, 2)), 1)
    with pytest.raises(SchemaError):
        LabeledSample("c", np.zeros((3, 3)), 9)
    with pytest.raises(SchemaError):
        LabeledSample("c", np.zeros((3, 3)), 1, source="scraped")


# ---------------------------------------------------------------------------
# checkpoints


def test_checkpoint_round_trip_sampling_bit_identical(tmp_path):
    policy = tiny_policy()
    schedule = policy.make_schedule()
    path = tmp_path / "ck.bin"
    save_checkpoint(policy, path)
    loaded = load_checkpoint(path)
    a = sample(policy, schedule, "move forward 5 meters", np.random.default_rng(7))
    b = sample(loaded, schedule, "move forward 5 meters", np.random.default_rng(7))
    assert np.array_equal(a.poses, b.poses)
    assert a.active_len == b.active_len
    # all tensors identical
    for k, v in policy.encoder.params.items():
        assert np.array_equal(v.data, loaded.encoder.params[k].data)
    for k, v in policy.denoiser.params.items():
        assert np.array_equal(v.data, loaded.denoiser.params[k].data)
    assert loaded.vocab == policy.vocab
    assert loaded.schedule_config == policy.schedule_config


def test_checkpoint_header_only_inspection(tmp_path):
    policy = tiny_policy()
    path = tmp_path / "ck.bin"
    save_checkpoint(policy, path)
    header = read_checkpoint_header(path)
    assert header["architecture"]["denoiser"]["width"] == 32
    assert header["architecture"]["encoder"]["d_model"] == 16
    assert header["flags"]["encoder_kind"] == "transformer"
    assert header["dtype"] == "float32"
    assert len(header["vocabulary"]) == policy.vocab.size


def test_truncated_checkpoint_is_error_not_crash(tmp_path):
    policy = tiny_policy()
    path = tmp_path / "ck.bin"
    save_checkpoint(policy, path)
    data = path.read_bytes()
    for cut in (4, 15, len(data) // 2, len(data) - 3):
        trunc = tmp_path / f"cut{cut}.bin"
        trunc.write_bytes(data[:cut])
        with pytest.raises(CheckpointError):
            load_checkpoint(trunc)


def test_version_mismatch_is_explicit(tmp_path):
    policy = tiny_policy()
    path = tmp_path / "ck.bin"
    save_checkpoint(policy, path)
    data = bytearray(path.read_bytes())
    # format version lives right after the 8-byte magic
    struct.pack_into("<I", data, 8, 99)
    bad = tmp_path / "bad.bin"
    bad.write_bytes(bytes(data))
    with pytest.raises(CheckpointError, match="version"):
        read_checkpoint_header(bad)


def test_not_a_checkpoint(tmp_path):
    path = tmp_path / "noise.bin"
    path.write_bytes(b"definitely not a checkpoint")
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_checkpoint_hash_stable(tmp_path):
    policy = tiny_policy()
    p1 = tmp_path / "a.bin"
    p2 = tmp_path / "b.bin"
    save_checkpoint(policy, p1)
    save_checkpoint(policy, p2)
    assert checkpoint_hash(p1) == checkpoint_hash(p2)


# ---------------------------------------------------------------------------
# config files


def test_default_config_sections_cover_train_fields(tmp_path):
    import dataclasses

    from dirtraj.training import default_config_sections

    sections = default_config_sections()
    flat = {k for sec in sections.values() for k in sec}
    field_names = {f.name for f in dataclasses.fields(TrainConfig)}
    assert flat <= field_names
    assert {"epochs", "batch_size", "lr_start", "lr_peak", "weight_decay"} <= flat
    assert sections["training"]["epochs"] == 30
    assert sections["training"]["weight_decay"] == 1.25e-6
    path = tmp_path / "defaults.cfg"
    save_config_file(sections, path)
    assert load_config_file(path)["training"]["batch_size"] == "64"


def test_config_file_round_trip(tmp_path):
    path = tmp_path / "run.cfg"
    sections = {
        "training": {"epochs": 30, "batch_size": 64, "lr_start": 0.0001,
                     "lr_peak": 0.002, "weight_decay": 1.25e-06},
        "atld": {"window": 7, "epsilon": 0.03},
    }
    save_config_file(sections, path)
    back = load_config_file(path)
    assert back["training"]["epochs"] == "30"
    assert float(back["training"]["weight_decay"]) == 1.25e-06
    assert float(back["atld"]["epsilon"]) == 0.03
