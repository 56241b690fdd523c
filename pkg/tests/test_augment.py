import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from dirtraj.augment import (
    CorruptionMode,
    augment_dataset,
    corrupt,
    external_paraphrase,
    load_distractors,
    paraphrase,
)
from dirtraj.grammar import UnparseableCommand, parse_raw
from dirtraj.synth import generate_dataset


def test_paraphrase_reproducible_and_distinct():
    a = paraphrase("Move forward 5 meters", 8, np.random.default_rng(3))
    b = paraphrase("Move forward 5 meters", 8, np.random.default_rng(3))
    assert a == b
    assert len(a) == 8
    assert len(set(a)) == 8
    assert "Move forward 5 meters" not in a


def test_paraphrase_preserves_intent_oracle():
    rng = np.random.default_rng(0)
    from dirtraj.grammar import render, sample_spec

    checked = 0
    for _ in range(1000):
        spec = sample_spec(rng)
        source = render(spec, rng)
        for variant in paraphrase(source, 3, rng):
            assert parse_raw(variant) == spec, variant
            checked += 1
    assert checked > 2500


def test_paraphrase_table1_style_variants():
    outs = paraphrase("Move forward 5 meters", 40, np.random.default_rng(1))
    joined = " | ".join(outs)
    assert any("frontward" in o or "ahead" in o or "forward" in o for o in outs)
    assert "5" in joined or "five" in joined

    turn = paraphrase("Turn slightly right", 30, np.random.default_rng(2))
    assert any("smidge" in o or "a bit" in o or "tiny bit" in o for o in turn)


def test_paraphrase_shortfall_warns(caplog):
    import logging

    with caplog.at_level(logging.WARNING, logger="dirtraj.augment"):
        outs = paraphrase("Turn left", 500, np.random.default_rng(0))
    assert 1 <= len(outs) < 500
    assert any("shortfall" in r.message for r in caplog.records)


def test_paraphrase_k1_is_intent_preserving():
    out = paraphrase("Turn left", 1, np.random.default_rng(7))
    assert len(out) == 1
    assert out[0] != "Turn left"
    assert parse_raw(out[0]) == parse_raw("Turn left")


def test_paraphrase_rejects_unparseable():
    with pytest.raises(UnparseableCommand):
        paraphrase("do a barrel roll", 3, np.random.default_rng(0))


def test_augment_dataset_growth_and_labels():
    ds = generate_dataset(40, seed=9)
    out, rejects = augment_dataset(ds, k=4, seed=1)
    assert rejects == []
    assert len(out) == 40 * 5
    by_family = {}
    for s in out.samples:
        by_family.setdefault(s.family_id, []).append(s)
    assert len(by_family) == 40
    for fam in by_family.values():
        assert len(fam) == 5
        originals = [s for s in fam if s.source == "synthetic"]
        assert len(originals) == 1
        for s in fam:
            assert np.array_equal(s.trajectory, originals[0].trajectory)
            assert s.active_len == originals[0].active_len


def test_augment_dataset_deterministic():
    ds = generate_dataset(10, seed=2)
    a, _ = augment_dataset(ds, k=3, seed=5)
    b, _ = augment_dataset(ds, k=3, seed=5)
    assert a == b


# ---------------------------------------------------------------------------
# corruption


def test_word_dropout_removes_one_non_numeric_token():
    rng = np.random.default_rng(0)
    for _ in range(50):
        out = corrupt("move forward 5 meters", CorruptionMode.WORD_DROPOUT, rng)
        tokens = out.split()
        assert len(tokens) == 3
        assert "5" in tokens  # numerals are never dropped
    outs = {corrupt("move forward five meters", CorruptionMode.WORD_DROPOUT,
                    np.random.default_rng(s)) for s in range(40)}
    assert all("five" in o for o in outs)  # spelled numerals kept too


def test_truncation_strict_prefix():
    cmd = "turn left at the door"
    seen = set()
    for s in range(60):
        out = corrupt(cmd, CorruptionMode.TRUNCATION, np.random.default_rng(s))
        assert cmd.startswith(out)
        assert out != cmd
        seen.add(out)
    assert "turn left" in seen  # the paper's example truncation occurs
    outs = {corrupt("move forward five meters", CorruptionMode.TRUNCATION,
                    np.random.default_rng(s)) for s in range(60)}
    assert "move forward five" in outs


def test_mixed_speaker_injection():
    lexicon = set(load_distractors())
    for s in range(40):
        out = corrupt("go forward", CorruptionMode.MIXED_SPEAKER,
                      np.random.default_rng(s))
        tokens = out.split()
        assert 3 <= len(tokens) <= 4
        injected = [t for t in tokens if t not in ("go", "forward")]
        assert injected
        assert all(t in lexicon for t in injected)


def test_corrupt_deterministic_and_guards():
    a = corrupt("move forward 5 meters", CorruptionMode.MIXED_SPEAKER,
                np.random.default_rng(8))
    b = corrupt("move forward 5 meters", CorruptionMode.MIXED_SPEAKER,
                np.random.default_rng(8))
    assert a == b
    with pytest.raises(ValueError):
        corrupt("move", CorruptionMode.TRUNCATION, np.random.default_rng(0))


# ---------------------------------------------------------------------------
# external paraphrase client


class _StubHandler(BaseHTTPRequestHandler):
    response_lines: list[str] = []

    def do_POST(self):
        length = int(self.headers.get("Content-Length") or 0)
        self.rfile.read(length)
        body = "\n".join(self.response_lines).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server, f"http://127.0.0.1:{server.server_address[1]}/"
    finally:
        server.shutdown()
        server.server_close()


def test_external_paraphrase_parses_lines(stub_server):
    _, endpoint = stub_server
    _StubHandler.response_lines = [
        "1. Advance 5 meters frontward",
        "2) Proceed forward 5 meters",
        "- March 5 meters forward",
    ]
    outs = external_paraphrase("Move forward 5 meters", 5, endpoint)
    assert outs == [
        "Advance 5 meters frontward",
        "Proceed forward 5 meters",
        "March 5 meters forward",
    ]


def test_external_paraphrase_drops_intent_violations(stub_server):
    _, endpoint = stub_server
    _StubHandler.response_lines = [
        "Proceed forward 5 meters",
        "Move left 5 meters",  # contradicts the forward intent
        "gibberish words here",
    ]
    outs = external_paraphrase("Move forward 5 meters", 5, endpoint)
    assert outs == ["Proceed forward 5 meters"]


def test_external_paraphrase_falls_back_on_unreachable():
    outs = external_paraphrase("Move forward 5 meters", 4,
                               "http://127.0.0.1:1/never", timeout=0.3)
    assert len(outs) == 4
    for o in outs:
        assert parse_raw(o) == parse_raw("Move forward 5 meters")
    # fallback is deterministic per command
    again = external_paraphrase("Move forward 5 meters", 4,
                                "http://127.0.0.1:1/never", timeout=0.3)
    assert outs == again
