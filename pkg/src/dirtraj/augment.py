"""Paraphrase augmentation and command corruption.

The rule-based paraphraser re-realizes a command's parsed intent through the
surface grammar, so every output provably re-parses to the same intent. An
external-generator client mirrors the same contract over a plain-text
request/response exchange and falls back to the rules on failure. Corruption
implements the three robustness modes: word dropout, truncation, and
mixed-speaker injection.
"""

from __future__ import annotations

import enum
import hashlib
import logging
import urllib.error
import urllib.request
from importlib import resources

import numpy as np

from .dataio import Dataset, LabeledSample
from .grammar import CommandSpec, UnparseableCommand, parse_command, surface_candidates
from .text import standardize

log = logging.getLogger(__name__)

PROMPT_TEMPLATE = "Generate {k} variations of the following command: {command}"

_NUMERAL_WORDS = frozenset(
    "zero one two three four five six seven eight nine ten eleven twelve "
    "thirteen fourteen fifteen sixteen seventeen eighteen nineteen twenty "
    "thirty forty fifty sixty seventy eighty ninety".split()
)


class CorruptionMode(enum.Enum):
    WORD_DROPOUT = "word_dropout"
    TRUNCATION = "truncation"
    MIXED_SPEAKER = "mixed_speaker"


def _intent_of(text: str) -> CommandSpec:
    return parse_command(standardize(text))


def paraphrase(command: str, k: int, rng: np.random.Generator) -> list[str]:
    """k distinct intent-preserving rewrites of a command.

    Raises UnparseableCommand when the source does not fit the grammar. If
    the grammar cannot produce k distinct rewrites, all available ones are
    returned and a shortfall warning is logged.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    spec = _intent_of(command)
    candidates = surface_candidates(spec)
    order = rng.permutation(len(candidates))
    out: list[str] = []
    for idx in order:
        text = candidates[idx]
        if text == command:
            continue
        try:
            if _intent_of(text) != spec:
                continue
        except UnparseableCommand:
            continue
        out.append(text)
        if len(out) == k:
            break
    if len(out) < k:
        log.warning(
            "paraphrase shortfall for %r: %d of %d distinct rewrites",
            command, len(out), k,
        )
    return out


def _parse_response_lines(body: str) -> list[str]:
    lines = []
    for line in body.splitlines():
        line = line.strip()
        # tolerate "1. text", "2) text", "- text" style listings
        line = line.lstrip("-*").strip()
        if line and line[0].isdigit():
            head = line.split(None, 1)
            if head and head[0].rstrip(".)").isdigit():
                line = head[1] if len(head) > 1 else ""
        line = line.strip().strip('"')
        if line:
            lines.append(line)
    return lines


def external_paraphrase(command: str, k: int, endpoint: str,
                        timeout: float = 10.0) -> list[str]:
    """Ask an external generator for paraphrases; fall back to rules on failure.

    The exchange is a single plain-text request/response: the request body is
    the prompt, the response is a newline-separated list. Responses that do
    not preserve the source intent are dropped with a warning.
    """
    spec = _intent_of(command)
    prompt = PROMPT_TEMPLATE.format(k=k, command=command)
    try:
        req = urllib.request.Request(
            endpoint,
            data=prompt.encode("utf-8"),
            headers={"Content-Type": "text/plain; charset=utf-8"},
            method="POST",
        )
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            body = resp.read().decode("utf-8")
        lines = _parse_response_lines(body)
        if not lines:
            raise ValueError("empty or malformed paraphrase response")
    except (urllib.error.URLError, TimeoutError, ValueError, OSError) as e:
        log.warning("external paraphrase failed (%s); using rule-based fallback", e)
        seed = int.from_bytes(hashlib.sha256(command.encode()).digest()[:8], "little")
        return paraphrase(command, k, np.random.default_rng(seed))
    kept = []
    for line in lines[: max(k, len(lines))]:
        try:
            if _intent_of(line) == spec:
                kept.append(line)
            else:
                log.warning("dropping intent-violating paraphrase %r", line)
        except (UnparseableCommand, ValueError):
            log.warning("dropping unparseable paraphrase %r", line)
    return kept[:k]


def augment_dataset(ds: Dataset, k: int, seed: int,
                    endpoint: str | None = None) -> tuple[Dataset, list[str]]:
    """Grow a dataset to n*(k+1) samples: each original plus k paraphrases.

    Paraphrases share the original's trajectory and family id. Unparseable
    commands are reported in the rejects list and keep only their original.
    """
    samples: list[LabeledSample] = []
    rejects: list[str] = []
    children = np.random.SeedSequence(seed).spawn(len(ds.samples))
    for s, child in zip(ds.samples, children):
        samples.append(s)
        try:
            if endpoint is not None:
                variants = external_paraphrase(s.command, k, endpoint)
            else:
                variants = paraphrase(s.command, k, np.random.default_rng(child))
        except UnparseableCommand:
            rejects.append(s.command)
            continue
        for text in variants:
            samples.append(LabeledSample(
                command=text,
                trajectory=s.trajectory,
                active_len=s.active_len,
                source="augmented",
                family_id=s.family_id,
            ))
    return Dataset(samples), rejects


def load_distractors() -> list[str]:
    text = resources.files("dirtraj").joinpath("data/distractors.txt").read_text("utf-8")
    return [
        line.strip() for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    ]


_DISTRACTORS: list[str] | None = None


def _distractors() -> list[str]:
    global _DISTRACTORS
    if _DISTRACTORS is None:
        _DISTRACTORS = load_distractors()
    return _DISTRACTORS


def _is_numeral(token: str) -> bool:
    t = token.strip(".,!?").lower()
    return t.isdigit() or t in _NUMERAL_WORDS


def corrupt(command: str, mode: CorruptionMode, rng: np.random.Generator) -> str:
    """Damage a command the way a noisy speech channel would."""
    tokens = command.split()
    if len(tokens) < 2:
        raise ValueError("corrupt needs a command with at least 2 tokens")
    if mode is CorruptionMode.WORD_DROPOUT:
        candidates = [i for i, t in enumerate(tokens) if not _is_numeral(t)]
        if not candidates:
            raise ValueError("no non-numeric token to drop")
        drop = candidates[rng.integers(len(candidates))]
        return " ".join(t for i, t in enumerate(tokens) if i != drop)
    if mode is CorruptionMode.TRUNCATION:
        keep = int(rng.integers(1, len(tokens)))
        return " ".join(tokens[:keep])
    if mode is CorruptionMode.MIXED_SPEAKER:
        lexicon = _distractors()
        for _ in range(int(rng.integers(1, 3))):
            word = lexicon[rng.integers(len(lexicon))]
            pos = int(rng.integers(0, len(tokens) + 1))
            tokens.insert(pos, word)
        return " ".join(tokens)
    raise ValueError(f"unknown corruption mode {mode}")
