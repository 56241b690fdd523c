"""Command standardization, vocabulary, and tokenization.

Standardization rewrites a raw command into a canonical lexical form:
lowercase ASCII words and digits separated by single spaces, with number
words mapped to digits and synonyms folded through a versioned alias table.
The table is data, not code, so the pipeline can run with standardization
disabled as an ablation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

PAD_ID = 0
UNK_ID = 1

_WORD_RE = re.compile(r"[a-z0-9]+")


class EmptyCommandError(ValueError):
    """Raised when a command contains no usable tokens."""


class SynonymTable:
    """alias=>canonical phrase folding with longest-match-first scanning."""

    def __init__(self, pairs):
        self._map: dict[tuple[str, ...], str] = {}
        self._max_len = 1
        for alias, canonical in pairs:
            key = tuple(alias.split())
            if not key:
                continue
            if key in self._map:  # first occurrence wins
                continue
            self._map[key] = canonical
            self._max_len = max(self._max_len, len(key))

    @classmethod
    def from_lines(cls, lines) -> "SynonymTable":
        pairs = []
        for line in lines:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=>" not in line:
                raise ValueError(f"malformed synonym line: {line!r}")
            alias, canonical = line.split("=>", 1)
            pairs.append((alias.strip().lower(), canonical.strip().lower()))
        return cls(pairs)

    @classmethod
    def from_file(cls, path) -> "SynonymTable":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_lines(fh)

    def to_lines(self) -> list[str]:
        return [f"{' '.join(k)}=>{v}" for k, v in self._map.items()]

    def fold_once(self, tokens: list[str]) -> list[str]:
        out: list[str] = []
        i = 0
        n = len(tokens)
        while i < n:
            matched = False
            for span in range(min(self._max_len, n - i), 0, -1):
                key = tuple(tokens[i : i + span])
                canonical = self._map.get(key)
                if canonical is not None:
                    out.extend(canonical.split())
                    i += span
                    matched = True
                    break
            if not matched:
                out.append(tokens[i])
                i += 1
        return out

    def fold(self, tokens: list[str]) -> list[str]:
        """Fold to a fixpoint so chained aliases cannot break idempotence."""
        for _ in range(10):
            folded = self.fold_once(tokens)
            if folded == tokens:
                return folded
            tokens = folded
        raise ValueError("synonym table contains an alias cycle")


def load_default_synonyms() -> SynonymTable:
    text = resources.files("dirtraj").joinpath("data/synonyms.txt").read_text("utf-8")
    return SynonymTable.from_lines(text.splitlines())


_DEFAULT_TABLE: SynonymTable | None = None


def _default_table() -> SynonymTable:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = load_default_synonyms()
    return _DEFAULT_TABLE


def _basic_tokens(raw: str) -> list[str]:
    lowered = raw.lower()
    lowered = re.sub(r"\bi'm\b", "i am", lowered)
    lowered = lowered.replace("'", "")
    return _WORD_RE.findall(lowered)


def standardize(raw: str, table: SynonymTable | None = None) -> str:
    """Rewrite a raw command into its canonical lexical form."""
    tokens = _basic_tokens(raw)
    if not tokens:
        raise EmptyCommandError("command has no usable tokens")
    if table is None:
        table = _default_table()
    return " ".join(table.fold(tokens))


def plain_tokens(raw: str) -> str:
    """Whitespace normalization only, for the no-standardization ablation."""
    tokens = raw.split()
    if not tokens:
        raise EmptyCommandError("command has no usable tokens")
    return " ".join(tokens)


@dataclass(frozen=True)
class Vocabulary:
    """Dense token-id map with reserved PAD=0 and UNK=1."""

    token_to_id: dict[str, int]
    id_to_token: tuple[str, ...]

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.id_to_token == other.id_to_token

    def __hash__(self):
        return hash(self.id_to_token)


def build_vocabulary(corpus) -> Vocabulary:
    """One id per distinct whitespace token, lexicographic after the reserved ids."""
    distinct = set()
    empty = True
    for text in corpus:
        empty = False
        distinct.update(text.split())
    if empty:
        raise ValueError("build_vocabulary needs a non-empty corpus")
    distinct.discard("<pad>")
    distinct.discard("<unk>")
    id_to_token = ("<pad>", "<unk>", *sorted(distinct))
    token_to_id = {tok: i for i, tok in enumerate(id_to_token)}
    return Vocabulary(token_to_id=token_to_id, id_to_token=id_to_token)


def tokenize(text: str, vocab: Vocabulary) -> list[int]:
    """Whitespace split, unknown tokens map to UNK, order preserved."""
    tokens = text.split()
    if not tokens:
        raise EmptyCommandError("cannot tokenize an empty command")
    return [vocab.token_to_id.get(tok, UNK_ID) for tok in tokens]


def detokenize(ids, vocab: Vocabulary) -> str:
    return " ".join(vocab.id_to_token[i] for i in ids)


@dataclass
class Command:
    """A command at every pipeline stage: raw text through pooled embedding."""

    raw: str
    standardized: str
    tokens: list[int]
    embedding: np.ndarray | None = None  # (m, d) per-token outputs
    pooled: np.ndarray | None = None  # (d,) mean-pooled vector
    _extra: dict = field(default_factory=dict, repr=False)
