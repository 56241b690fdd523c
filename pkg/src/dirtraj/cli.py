"""Command-line surface for the whole pipeline.

Subcommands: gen-data, augment, train, eval, corrupt-eval, sample, serve.
Every seeded subcommand is byte-reproducible. Exit codes: 0 success,
1 usage, 2 data/schema error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
import time

import numpy as np

from . import __version__
from .augment import CorruptionMode, augment_dataset, corrupt
from .dataio import (
    CheckpointError,
    SchemaError,
    load_checkpoint,
    load_config_file,
    read_dataset,
    save_checkpoint,
    write_dataset,
)
from .geometry import Trajectory
from .metrics import aggregate, evaluate
from .policy import sample as sample_trajectory
from .policy import sample_batch
from .synth import DriverNoise, ZERO_NOISE, generate_dataset
from .text import EmptyCommandError
from .training import TrainConfig, TrainingDiverged, history_to_dicts, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

_CORRUPTION_BY_FLAG = {
    "dropout": CorruptionMode.WORD_DROPOUT,
    "truncate": CorruptionMode.TRUNCATION,
    "mixed": CorruptionMode.MIXED_SPEAKER,
}

_NOISE_PROFILES = {
    "default": DriverNoise(),
    "zero": ZERO_NOISE,
    "high": DriverNoise(0.10, 0.07, 0.02),
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def build_parser() -> _Parser:
    parser = _Parser(prog="dirtraj", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic labeled dataset")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-profile", choices=sorted(_NOISE_PROFILES), default="default")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("augment", help="add intent-preserving paraphrases")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=_positive_int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--external-endpoint", default=None,
                   help="optional paraphrase service address; rules are the fallback")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train", help="train the diffusion policy")
    p.add_argument("--data", required=True)
    p.add_argument("--epochs", type=_positive_int, default=30)
    p.add_argument("--batch-size", type=_positive_int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-checkpoint", required=True)
    p.add_argument("--history-out", default=None)
    p.add_argument("--config", default=None,
                   help="key=value config file; its values override flags")
    p.add_argument("--no-standardize", action="store_true",
                   help="ablation: skip command standardization")
    p.add_argument("--no-augment-use", action="store_true",
                   help="ablation: drop augmented samples before training")
    p.add_argument("--no-atld", action="store_true",
                   help="ablation: emit full-capacity trajectories, no truncation")
    p.add_argument("--encoder", choices=("trained", "bag-of-words"), default="trained")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a test dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--test-data", required=True)
    p.add_argument("--seeds", type=_positive_int, default=1,
                   help="number of sampling passes per command")
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--report", default=None, help="write the run report JSON here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("corrupt-eval", help="evaluate robustness to corrupted commands")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--test-data", required=True)
    p.add_argument("--mode", choices=sorted(_CORRUPTION_BY_FLAG), required=True)
    p.add_argument("--n", type=_positive_int, default=925)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_corrupt_eval)

    p = sub.add_parser("sample", help="generate one trajectory for a command")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--command", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--emit", choices=("json", "svg"), default="json")
    p.add_argument("--out", default=None, help="output path (stdout for json)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("serve", help="run the guidance session service")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--bind", default="127.0.0.1:8321")
    p.set_defaults(func=cmd_serve)

    return parser


# ---------------------------------------------------------------------------


def cmd_gen_data(args) -> int:
    ds = generate_dataset(args.n, _NOISE_PROFILES[args.noise_profile], args.seed)
    write_dataset(ds, args.out)
    print(f"wrote {len(ds)} samples to {args.out}")
    return EXIT_OK


def cmd_augment(args) -> int:
    ds = read_dataset(args.input)
    out, rejects = augment_dataset(ds, args.k, args.seed, endpoint=args.external_endpoint)
    write_dataset(out, args.out)
    print(f"augmented {len(ds)} -> {len(out)} samples (k={args.k})")
    if rejects:
        rejects_path = args.out + ".rejects.txt"
        with open(rejects_path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(rejects) + "\n")
        print(f"{len(rejects)} unparseable commands listed in {rejects_path}")
    else:
        print("rejects report: none")
    return EXIT_OK


def _apply_config_file(cfg: TrainConfig, path) -> TrainConfig:
    """Config-file values take precedence over flags."""
    sections = load_config_file(path)
    merged = {}
    for values in sections.values():
        merged.update(values)
    kwargs = {}
    for f in dataclasses.fields(TrainConfig):
        if f.name not in merged:
            continue
        raw = merged[f.name]
        if f.type in ("int", int):
            kwargs[f.name] = int(raw)
        elif f.type in ("float", float):
            kwargs[f.name] = float(raw)
        elif f.type in ("bool", bool):
            kwargs[f.name] = raw.strip().lower() in ("1", "true", "yes", "on")
        else:
            kwargs[f.name] = raw
    return dataclasses.replace(cfg, **kwargs)


def cmd_train(args) -> int:
    ds = read_dataset(args.data)
    if args.no_augment_use:
        kept = [s for s in ds.samples if s.source != "augmented"]
        print(f"--no-augment-use: {len(ds)} -> {len(kept)} samples")
        ds.samples = kept
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        standardize=not args.no_standardize,
        use_atld=not args.no_atld,
        encoder_kind="bag_of_words" if args.encoder == "bag-of-words" else "transformer",
    )
    if args.config:
        cfg = _apply_config_file(cfg, args.config)
    log = None if args.quiet else print
    policy, history = train(ds, cfg, log=log)
    save_checkpoint(policy, args.out_checkpoint)
    history_path = args.history_out or (args.out_checkpoint + ".history.json")
    with open(history_path, "w", encoding="utf-8") as fh:
        json.dump(history_to_dicts(history), fh, indent=2)
    print(f"checkpoint: {args.out_checkpoint}")
    print(f"history: {history_path}")
    return EXIT_OK


def _config_hash(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True).encode("utf-8")
    return hashlib.sha256(canon).hexdigest()[:16]


def _summary_dict(summary) -> dict:
    return {
        "sr_percent": summary.sr_percent,
        "rmse_cm": {"mean": summary.rmse_mean_cm, "std": summary.rmse_std_cm},
        "maoe_deg": {"mean": summary.maoe_mean_deg, "std": summary.maoe_std_deg},
        "count": summary.count,
    }


def _write_report(report: dict, path: str | None):
    text = json.dumps(report, indent=2)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print(f"report: {path}")
    else:
        print(text)


def cmd_eval(args) -> int:
    from .dataio import read_checkpoint_header

    policy = load_checkpoint(args.checkpoint)
    header = read_checkpoint_header(args.checkpoint)
    ds = read_dataset(args.test_data)
    schedule = policy.make_schedule()
    refs = [Trajectory(s.trajectory, s.active_len) for s in ds.samples]
    commands = [s.command for s in ds.samples]

    per_seed = []
    all_results = []
    for pass_idx in range(args.seeds):
        gens = sample_batch(policy, schedule, commands,
                            seed=args.base_seed + 7919 * pass_idx)
        results = [evaluate(g, r) for g, r in zip(gens, refs)]
        all_results.extend(results)
        per_seed.append(_summary_dict(aggregate(results)))

    # per-command latency on a subset, single-sample path
    timing_n = min(50, len(commands))
    times = []
    for i in range(timing_n):
        t0 = time.perf_counter()
        sample_trajectory(policy, schedule, commands[i], np.random.default_rng(i))
        times.append(time.perf_counter() - t0)
    times_ms = np.array(times) * 1e3

    report = {
        "subcommand": "eval",
        "checkpoint": args.checkpoint,
        "test_data": args.test_data,
        "seed": args.base_seed,
        "passes": args.seeds,
        "config_hash": _config_hash(header),
        "config": header,
        "aggregate": _summary_dict(aggregate(all_results)),
        "per_seed": per_seed,
        "inference_ms": {
            "mean": float(times_ms.mean()),
            "p50": float(np.percentile(times_ms, 50)),
            "p90": float(np.percentile(times_ms, 90)),
            "p99": float(np.percentile(times_ms, 99)),
            "count": timing_n,
        },
    }
    _write_report(report, args.report)
    summary = report["aggregate"]
    print(f"SR {summary['sr_percent']:.1f}%  RMSE {summary['rmse_cm']['mean']:.1f}"
          f" +/- {summary['rmse_cm']['std']:.1f} cm  MAOE {summary['maoe_deg']['mean']:.2f}"
          f" +/- {summary['maoe_deg']['std']:.2f} deg")
    return EXIT_OK


def cmd_corrupt_eval(args) -> int:
    from .dataio import read_checkpoint_header

    policy = load_checkpoint(args.checkpoint)
    header = read_checkpoint_header(args.checkpoint)
    ds = read_dataset(args.test_data)
    if not ds.samples:
        raise SchemaError("test dataset is empty")
    schedule = policy.make_schedule()
    mode = _CORRUPTION_BY_FLAG[args.mode]
    rng = np.random.default_rng(np.random.SeedSequence((args.seed, 0xBAD)))

    corrupted, refs = [], []
    for j in range(args.n):
        s = ds.samples[j % len(ds.samples)]
        corrupted.append(corrupt(s.command, mode, rng))
        refs.append(Trajectory(s.trajectory, s.active_len))
    gens = sample_batch(policy, schedule, corrupted, seed=args.seed)
    summary = aggregate([evaluate(g, r) for g, r in zip(gens, refs)])

    report = {
        "subcommand": "corrupt-eval",
        "checkpoint": args.checkpoint,
        "test_data": args.test_data,
        "mode": args.mode,
        "n": args.n,
        "seed": args.seed,
        "config_hash": _config_hash(header),
        "aggregate": _summary_dict(summary),
    }
    _write_report(report, args.report)
    print(f"{args.mode}: SR {summary.sr_percent:.1f}%  RMSE {summary.rmse_mean_cm:.1f} cm"
          f"  MAOE {summary.maoe_mean_deg:.2f} deg")
    return EXIT_OK


def trajectory_svg(traj: Trajectory, width: int = 480, margin: float = 0.5) -> str:
    """Standalone SVG of the xy path with heading arrows."""
    pts = traj.active
    xs, ys = pts[:, 0], pts[:, 1]
    lo = min(xs.min(), ys.min()) - margin
    hi = max(xs.max(), ys.max()) + margin
    span = max(hi - lo, 1e-6)
    scale = width / span

    def sx(x):
        return (x - lo) * scale

    def sy(y):  # svg y grows downward
        return width - (y - lo) * scale

    path = " ".join(f"{'M' if i == 0 else 'L'} {sx(x):.2f} {sy(y):.2f}"
                    for i, (x, y) in enumerate(zip(xs, ys)))
    arrows = []
    step = max(1, len(pts) // 8)
    alen = 0.25 * span / 10
    for x, y, th in pts[::step]:
        tip_x, tip_y = x + alen * np.cos(th), y + alen * np.sin(th)
        arrows.append(
            f'<line x1="{sx(x):.2f}" y1="{sy(y):.2f}" x2="{sx(tip_x):.2f}" '
            f'y2="{sy(tip_y):.2f}" stroke="#c0392b" stroke-width="1.5"/>'
        )
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{width}" '
        f'viewBox="0 0 {width} {width}">\n'
        f'<rect width="{width}" height="{width}" fill="#fafafa"/>\n'
        f'<path d="{path}" fill="none" stroke="#2c3e50" stroke-width="2"/>\n'
        f'<circle cx="{sx(xs[0]):.2f}" cy="{sy(ys[0]):.2f}" r="4" fill="#27ae60"/>\n'
        f'<circle cx="{sx(xs[-1]):.2f}" cy="{sy(ys[-1]):.2f}" r="4" fill="#2980b9"/>\n'
        + "\n".join(arrows) + "\n</svg>\n"
    )


def cmd_sample(args) -> int:
    if not args.command.strip():
        raise _UsageError("command must not be empty")
    policy = load_checkpoint(args.checkpoint)
    schedule = policy.make_schedule()
    traj = sample_trajectory(policy, schedule, args.command, np.random.default_rng(args.seed))
    if args.emit == "json":
        payload = json.dumps(traj.active.tolist())
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(payload + "\n")
        else:
            print(payload)
    else:
        out = args.out or "trajectory.svg"
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(trajectory_svg(traj))
        print(f"wrote {out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .dataio import checkpoint_hash
    from .service import GuidanceEngine, make_server

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    policy = load_checkpoint(args.checkpoint)
    engine = GuidanceEngine(policy, checkpoint_hash=checkpoint_hash(args.checkpoint))
    host, _, port = args.bind.rpartition(":")
    try:
        server = make_server(engine, host or "127.0.0.1", int(port))
    except OSError as e:
        print(f"cannot bind {args.bind}: {e}", file=sys.stderr)
        return EXIT_DATA
    print(f"serving on http://{host or '127.0.0.1'}:{port} (Ctrl-C to stop)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        print("shutting down")
    finally:
        server.shutdown()
        server.server_close()
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (SchemaError, CheckpointError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except EmptyCommandError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingDiverged as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except FloatingPointError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
