"""Acceptance criteria for the whole pipeline, one test per criterion.

Each test prints a PASS/FAIL line with its measured numbers. The desk-scale
model (AC-4 recipe: 2000 grammar samples, k=8 paraphrases, 30 epochs, batch
64, lr 1e-4 -> 2e-3, weight decay 1.25e-6) is trained once per recipe hash
and cached under tests/_artifacts/; delete that directory to retrain.

Run:  pytest tests/test_acceptance.py -s
Skip the training-dependent criteria with:  pytest -m "not slow"
"""

import hashlib
import itertools
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from dirtraj import nn
from dirtraj.atld import AtldConfig, determine_length
from dirtraj.augment import CorruptionMode, augment_dataset, corrupt, paraphrase
from dirtraj.dataio import load_checkpoint, read_dataset, save_checkpoint, write_dataset
from dirtraj.diffusion import make_schedule
from dirtraj.geometry import Trajectory, weighted_displacement
from dirtraj.grammar import parse_raw, surface_candidates
from dirtraj.metrics import aggregate, evaluate
from dirtraj.nn import Tensor, finite_difference_grad
from dirtraj.policy import sample, sample_batch
from dirtraj.service import GuidanceEngine
from dirtraj.synth import ZERO_NOISE, generate_dataset, oracle_trajectory
from dirtraj.training import TrainConfig, train

from test_metrics import brute_force_evaluate, random_pair

ARTIFACTS = Path(__file__).parent / "_artifacts"

DESK_RECIPE = {
    "n": 2000,
    "data_seed": 1000,
    "k": 8,
    "augment_seed": 1001,
    "epochs": 30,
    "batch_size": 64,
    "train_seed": 0,
}

ABLATION_RECIPE = {
    "n": 600,
    "data_seed": 3000,
    "k": 4,
    "augment_seed": 3001,
    "epochs": 12,
    "batch_size": 64,
    "train_seed": 0,
}


def _report(name: str, ok: bool, detail: str):
    print(f"{name} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"{name}: {detail}"


def _recipe_hash(recipe: dict, extra: str = "") -> str:
    return hashlib.sha256(
        (json.dumps(recipe, sort_keys=True) + extra).encode()
    ).hexdigest()[:10]


def _desk_dataset(recipe=None):
    recipe = recipe or DESK_RECIPE
    originals = generate_dataset(recipe["n"], seed=recipe["data_seed"])
    augmented, rejects = augment_dataset(
        originals, k=recipe["k"], seed=recipe["augment_seed"]
    )
    assert not rejects
    return originals, augmented


def _train_or_load(recipe: dict, variant: str = "full"):
    ARTIFACTS.mkdir(exist_ok=True)
    path = ARTIFACTS / f"model_{variant}_{_recipe_hash(recipe, variant)}.ckpt"
    if path.exists():
        return load_checkpoint(path)
    originals, augmented = _desk_dataset(recipe)
    dataset = augmented
    kwargs = {}
    if variant == "no_augment":
        dataset = originals
    elif variant == "no_standardize":
        kwargs["standardize"] = False
    elif variant == "no_atld":
        kwargs["use_atld"] = False
    elif variant == "bag_of_words":
        kwargs["encoder_kind"] = "bag_of_words"
    cfg = TrainConfig(
        epochs=recipe["epochs"],
        batch_size=recipe["batch_size"],
        seed=recipe["train_seed"],
        **kwargs,
    )
    t0 = time.time()
    policy, _ = train(dataset, cfg, log=None)
    print(f"[trained {variant} model in {(time.time() - t0) / 60:.1f} min]")
    save_checkpoint(policy, path)
    return policy


@pytest.fixture(scope="session")
def desk_model():
    policy = _train_or_load(DESK_RECIPE, "full")
    return policy, policy.make_schedule()


def _held_out_commands(originals, augmented, n, seed):
    """Unseen paraphrases of trained families, sampled in proportion to the
    trained family distribution (families with every surface form consumed by
    training are skipped)."""
    train_cmds = {s.command for s in augmented.samples}
    rng = np.random.default_rng(seed)
    commands, specs = [], []
    guard = 0
    while len(commands) < n and guard < 100 * n:
        guard += 1
        sample_of = originals.samples[int(rng.integers(len(originals.samples)))]
        spec = parse_raw(sample_of.command)
        candidates = [c for c in surface_candidates(spec) if c not in train_cmds]
        if not candidates:
            continue
        commands.append(candidates[int(rng.integers(len(candidates)))])
        specs.append(spec)
    assert len(commands) == n
    return commands, specs


# ---------------------------------------------------------------------------


def test_ac1_metrics_oracle_equivalence():
    rng = np.random.default_rng(11)
    t0 = time.time()
    worst = 0.0
    results = []
    for _ in range(1000):
        g, r = random_pair(rng, n_gen=int(rng.integers(2, 12)),
                           n_ref=int(rng.integers(2, 12)))
        res = evaluate(Trajectory(g), Trajectory(r))
        rmse, maoe, success, endpoint = brute_force_evaluate(g.tolist(), r.tolist())
        worst = max(worst, abs(res.rmse_cm - rmse), abs(res.maoe_deg - maoe),
                    abs(res.endpoint_error_m - endpoint))
        assert res.success == success
        results.append(res)
    summary = aggregate(results)
    by_hand_mean = sum(x.rmse_cm for x in results) / len(results)
    worst = max(worst, abs(summary.rmse_mean_cm - by_hand_mean))
    elapsed = time.time() - t0
    _report(
        "AC-1", worst < 1e-9 and elapsed < 10.0,
        f"max |library - brute force| = {worst:.2e} over 1000 pairs in {elapsed:.1f}s",
    )


def test_ac2_atld_exactness():
    t0 = time.time()
    constant = Trajectory(np.tile([1.0, 2.0, 0.3], (22, 1)))
    h_const, _ = determine_length(constant)

    line = np.zeros((22, 3))
    line[:, 0] = np.arange(22) * 0.3
    h_line, _ = determine_length(Trajectory(line))

    stop = np.zeros((22, 3))
    stop[:10, 0] = np.arange(10) * 0.3
    stop[10:, 0] = stop[9, 0]
    h_stop, _ = determine_length(Trajectory(stop))

    exact = (h_const == 8 and h_line == 22 and h_stop == 17)

    rng = np.random.default_rng(2)
    monotone = True
    for _ in range(100):
        cut = int(rng.integers(2, 20))
        steps = rng.uniform(-0.4, 0.4, size=(22, 3))
        steps[cut:] = 0.0
        traj = Trajectory(np.cumsum(steps, axis=0))
        hs = [determine_length(traj, AtldConfig(window=7, epsilon=e))[0]
              for e in (0.01, 0.03, 0.1, 0.5, 2.0)]
        monotone &= hs == sorted(hs, reverse=True)
    elapsed = time.time() - t0
    _report(
        "AC-2", exact and monotone and elapsed < 5.0,
        f"h(constant)={h_const}, h(moving)={h_line}, h(move-10-stop)={h_stop}, "
        f"epsilon-monotone over 100 trajectories, {elapsed:.1f}s",
    )


def test_ac3_gradient_correctness():
    """Backprop vs central differences on a width-16 instance, float64."""
    from dirtraj.encoder import EncoderConfig, TextEncoder
    from dirtraj.policy import DenoiserConfig, NoiseDenoiser

    t0 = time.time()
    rng = np.random.default_rng(0)
    enc = TextEncoder(
        EncoderConfig(vocab_size=8, d_model=16, n_blocks=1, n_heads=2, max_tokens=6),
        rng, dtype=np.float64,
    )
    den = NoiseDenoiser(
        DenoiserConfig(width=16, n_blocks=1, n_heads=2, cond_dim=16),
        rng, dtype=np.float64,
    )
    ids = np.array([[2, 5, 3], [7, 1, 4]])
    tau = rng.standard_normal((2, 88))
    ks = np.array([3, 7])
    eps = rng.standard_normal((2, 88))

    def loss_value() -> float:
        _, pooled = enc.forward(ids)
        out = den.forward(tau, ks, pooled)
        return float(np.mean((out.data - eps) ** 2))

    enc.params.zero_grads()
    den.params.zero_grads()
    _, pooled = enc.forward(ids)
    out = den.forward(tau, ks, pooled)
    diff = out - Tensor(eps)
    loss = (diff * diff).sum() * (1.0 / eps.size)
    nn.backward(loss)

    worst_rel, worst_name = 0.0, ""
    checked = 0
    for store_name, store in (("encoder", enc.params), ("denoiser", den.params)):
        for name, p in store.items():
            fd = finite_difference_grad(loss_value, p.data, step=1e-5)
            bp = p.grad if p.grad is not None else np.zeros_like(p.data)
            diff_norm = np.linalg.norm(bp - fd)
            denom = np.linalg.norm(bp) + np.linalg.norm(fd)
            if diff_norm < 1e-9:  # analytically zero blocks (attention key bias)
                checked += 1
                continue
            rel = diff_norm / denom
            if rel > worst_rel:
                worst_rel, worst_name = rel, f"{store_name}.{name}"
            checked += 1
    elapsed = time.time() - t0
    _report(
        "AC-3", worst_rel < 1e-4 and elapsed < 60.0,
        f"worst relative error {worst_rel:.2e} ({worst_name}) over "
        f"{checked} parameter blocks in {elapsed:.1f}s",
    )


@pytest.mark.slow
def test_ac4_desk_scale_learning(desk_model):
    policy, schedule = desk_model
    originals, augmented = _desk_dataset()
    commands, specs = _held_out_commands(originals, augmented, 200, seed=555)
    gens = sample_batch(policy, schedule, commands, seed=777)

    successes = 0
    ratios = []
    for spec, gen in zip(specs, gens):
        ref = oracle_trajectory(spec, ZERO_NOISE, np.random.default_rng(0))
        err = float(np.hypot(*(gen.active[-1][:2] - ref.active[ref.active_len - 1][:2])))
        if err < 0.5:
            successes += 1
        commanded = spec.magnitude if spec.intent == "move" else (
            spec.distance if spec.intent == "implicit_locate" else 0.0)
        if commanded:
            ratios.append(err / commanded)
    sr = 100.0 * successes / len(commands)
    ratio = float(np.mean(ratios))
    _report(
        "AC-4", sr >= 80.0 and ratio <= 0.20,
        f"held-out SR@0.5m {sr:.1f}% (need >= 80), mean endpoint error "
        f"{100 * ratio:.1f}% of commanded distance (need <= 20) over "
        f"{len(commands)} paraphrases",
    )


@pytest.mark.slow
def test_ac5_paraphrase_consistency(desk_model):
    """Endpoint-displacement consistency per Table-1 family.

    The displacement of each sampled endpoint from the trajectory start is
    measured in the weighted SE(2) norm (the package's uniform displacement
    metric), so turn commands are comparable with translations. Consistency
    = std of that scalar over 30 paraphrase samples, bounded by 15% of the
    commanded magnitude in the same norm; family means (as displacement
    vectors) must be separated by > 3x the largest family std.
    """
    policy, schedule = desk_model
    families = {
        "forward-5m": ("Move forward 5 meters", 5.0),
        "left-4m": ("Move 4 meters to the left", 4.0),
        "slight-right": ("Turn slightly right", math.radians(15.0)),
    }
    stds, means, details = {}, {}, []
    ok = True
    for name, (source, magnitude) in families.items():
        commands = [source] + paraphrase(source, 29, np.random.default_rng(99))
        gens = sample_batch(policy, schedule, commands[:30], seed=888)
        end = np.array([
            [g.active[-1][0], g.active[-1][1], g.active[-1][2]] for g in gens
        ])
        start = np.zeros(3)
        displacement = np.array([
            weighted_displacement(e, start) for e in end
        ])
        std = float(np.std(displacement))
        vec = end.mean(axis=0)
        vec[2] = float(np.arctan2(np.sin(end[:, 2]).mean(), np.cos(end[:, 2]).mean()))
        stds[name] = std
        means[name] = np.array([vec[0], vec[1], vec[2]])
        bound = 0.15 * magnitude
        ok &= std <= bound
        details.append(f"{name}: std {std:.3f} (bound {bound:.3f})")

    sep_ok = True
    largest = max(stds.values())
    for a, b in itertools.combinations(families, 2):
        sep = weighted_displacement(means[a], means[b])
        sep_ok &= sep > 3.0 * largest
        details.append(f"sep({a},{b})={sep:.2f}")
    _report(
        "AC-5", ok and sep_ok,
        "; ".join(details) + f"; 3x largest std = {3 * largest:.2f}",
    )


@pytest.mark.slow
def test_embedding_space_groups_paraphrase_families(desk_model):
    """Joint training pulls each family's pooled embeddings together: mean
    intra-family cosine distance stays below mean inter-family distance on
    held-out paraphrases (the shared-embedding-space property)."""
    policy, _ = desk_model
    from dirtraj.policy import embed_command

    sources = ("Move forward 5 meters", "Move 4 meters to the left",
               "Turn slightly right")
    pooled = []
    for i, source in enumerate(sources):
        texts = [source] + paraphrase(source, 12, np.random.default_rng(200 + i))
        pooled.append(np.stack([embed_command(policy, t).pooled for t in texts]))

    def cos_dist(a, b):
        return 1.0 - float(
            a @ b / (np.linalg.norm(a) * np.linalg.norm(b) + 1e-12)
        )

    intra, inter = [], []
    for fam_i, block in enumerate(pooled):
        for i in range(len(block)):
            for j in range(i + 1, len(block)):
                intra.append(cos_dist(block[i], block[j]))
            for fam_j in range(fam_i + 1, len(pooled)):
                for other in pooled[fam_j]:
                    inter.append(cos_dist(block[i], other))
    intra_mean = float(np.mean(intra))
    inter_mean = float(np.mean(inter))
    _report(
        "EMBED-FAMILIES", intra_mean < inter_mean,
        f"mean intra-family cosine distance {intra_mean:.4f} < "
        f"inter-family {inter_mean:.4f}",
    )


@pytest.mark.slow
def test_ac6_corruption_ordering(desk_model):
    policy, schedule = desk_model
    test_set = generate_dataset(200, seed=2000)
    sr = {}
    for mode in (CorruptionMode.WORD_DROPOUT, CorruptionMode.TRUNCATION,
                 CorruptionMode.MIXED_SPEAKER):
        rng = np.random.default_rng(31)
        corrupted = [corrupt(s.command, mode, rng) for s in test_set.samples]
        gens = sample_batch(policy, schedule, corrupted, seed=999)
        hits = 0
        for s, g in zip(test_set.samples, gens):
            ref_end = s.trajectory[s.active_len - 1][:2]
            if float(np.hypot(*(g.active[-1][:2] - ref_end))) < 0.5:
                hits += 1
        sr[mode.value] = 100.0 * hits / len(test_set.samples)
    d, t, m = sr["word_dropout"], sr["truncation"], sr["mixed_speaker"]
    gaps_ok = d >= t >= m
    strict = sum([d > t, t > m, d > m])
    _report(
        "AC-6", gaps_ok and strict >= 2,
        f"SR@0.5m dropout {d:.1f}% >= truncation {t:.1f}% >= mixed {m:.1f}% "
        f"({strict}/3 strict)",
    )


@pytest.mark.slow
def test_ac7_ablation_direction():
    originals, augmented = _desk_dataset(ABLATION_RECIPE)
    commands, specs = _held_out_commands(originals, augmented, 150, seed=4242)
    refs = [oracle_trajectory(spec, ZERO_NOISE, np.random.default_rng(0))
            for spec in specs]

    def held_out_sr(policy) -> float:
        gens = sample_batch(policy, policy.make_schedule(), commands, seed=4747)
        hits = 0
        for gen, ref in zip(gens, refs):
            err = float(np.hypot(*(gen.active[-1][:2] - ref.active[ref.active_len - 1][:2])))
            if err < 0.5:
                hits += 1
        return 100.0 * hits / len(commands)

    srs = {}
    for variant in ("full", "no_standardize", "no_atld", "bag_of_words", "no_augment"):
        policy = _train_or_load(ABLATION_RECIPE, variant)
        srs[variant] = held_out_sr(policy)
    full = srs.pop("full")
    ok = all(full >= v for v in srs.values())
    _report(
        "AC-7", ok,
        f"full {full:.1f}% vs " + ", ".join(f"{k} {v:.1f}%" for k, v in srs.items()),
    )


def test_ac8_determinism_and_persistence(tmp_path):
    # byte-identical seeded dataset generation through the CLI surface
    from dirtraj.cli import main as cli_main

    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert cli_main(["gen-data", "--n", "40", "--seed", "5", "--out", str(a)]) == 0
    assert cli_main(["gen-data", "--n", "40", "--seed", "5", "--out", str(b)]) == 0
    bytes_ok = a.read_bytes() == b.read_bytes()

    # dataset round-trip is bit-exact
    ds = read_dataset(a)
    again = tmp_path / "again.jsonl"
    write_dataset(ds, again)
    roundtrip_ok = again.read_bytes() == a.read_bytes()

    # augmented datasets too
    aug1, _ = augment_dataset(ds, k=3, seed=9)
    aug2, _ = augment_dataset(ds, k=3, seed=9)
    augment_ok = aug1 == aug2

    # checkpoint round-trip: sampling is bit-identical after save/load
    from dirtraj.text import build_vocabulary
    from dirtraj.training import build_policy

    vocab = build_vocabulary(["move forward 5 meters", "turn slightly right"])
    cfg = TrainConfig(encoder_dim=16, encoder_blocks=1, encoder_heads=2,
                      denoiser_width=32, denoiser_blocks=1, denoiser_heads=2,
                      diffusion_steps=8, seed=3)
    policy = build_policy(vocab, cfg)
    schedule = policy.make_schedule()
    ck = tmp_path / "m.ckpt"
    save_checkpoint(policy, ck)
    loaded = load_checkpoint(ck)
    t1 = sample(policy, schedule, "move forward 5 meters", np.random.default_rng(4))
    t2 = sample(loaded, schedule, "move forward 5 meters", np.random.default_rng(4))
    sample_ok = np.array_equal(t1.poses, t2.poses) and t1.active_len == t2.active_len

    ok = bytes_ok and roundtrip_ok and augment_ok and sample_ok
    _report(
        "AC-8", ok,
        f"gen-data byte-identical={bytes_ok}, dataset round-trip={roundtrip_ok}, "
        f"augment deterministic={augment_ok}, save/load sampling bit-identical={sample_ok}",
    )


@pytest.mark.slow
def test_ac9_service_protocol(desk_model):
    policy, _ = desk_model
    engine = GuidanceEngine(policy)

    # deterministic scan for a layout whose target sits ~4 m from the robot
    session = None
    for seed in range(500):
        cand = engine.create_session(target_marker=0, seed=seed)
        dists = [math.hypot(m[0] - cand.robot_pose.x, m[1] - cand.robot_pose.y)
                 for m in cand.markers]
        picks = [i for i, d in enumerate(dists) if 3.9 <= d <= 4.1]
        if picks:
            session = engine.create_session(target_marker=picks[0], seed=seed)
            break
    assert session is not None, "no 4 m layout found in 500 seeds"
    start_error = session.distance_to_target()

    def leader_command():
        pose = session.robot_pose
        target = session.target_xy()
        dx, dy = target[0] - pose.x, target[1] - pose.y
        c, s = math.cos(-pose.theta), math.sin(-pose.theta)
        fx, fy = c * dx - s * dy, s * dx + c * dy
        heading = math.degrees(math.atan2(fy, fx))
        if abs(heading) > 120:
            return f"Turn sharply {'left' if heading > 0 else 'right'}"
        if abs(heading) > 30:
            return f"Turn {'left' if heading > 0 else 'right'}"
        return f"Move forward {max(1, min(6, round(math.hypot(fx, fy))))} meters"

    sent = []
    for _ in range(3):
        if session.status != "active":
            break
        cmd = leader_command()
        sent.append(cmd)
        engine.apply_command(session.id, cmd)

    report = engine.report(session.id)
    reached = session.status == "reached" and report["final_error_m"] < 1.0
    consistent = (
        report["num_steps"] == len(sent) == len(session.transcript)
        and report["status"] == "reached"
        and report["elapsed_s"] >= 0.0
    )
    _report(
        "AC-9", reached and consistent,
        f"target at {start_error:.2f} m reached in {len(sent)} commands "
        f"({sent}); report: error {report['final_error_m']:.2f} m, "
        f"steps {report['num_steps']}, {report['elapsed_s']:.2f} s",
    )
