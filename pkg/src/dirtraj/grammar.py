"""Closed command grammar: structured specs, surface realization, and parsing.

A `CommandSpec` captures the intent of a guidance command. `render` turns a
spec into one of many natural surface strings, `parse_command` recovers the
spec from standardized text. Every rendered string must parse back to its
spec; the paraphraser reuses the same realization machinery with larger
alternate pools.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .text import standardize

MOVE_DIRECTIONS = ("forward", "backward", "left", "right")
TURN_DIRECTIONS = ("left", "right")
RELATIONS = ("behind", "in_front", "left", "right")

# slight / plain / sharp turns, in degrees
TURN_MAGNITUDES = (15.0, 45.0, 90.0)

MOVE_DISTANCES_M = (1, 2, 3, 4, 5, 6)
IMPLICIT_DISTANCES_M = (1, 2, 3, 4, 5, 6)

_NUMBER_WORDS = {
    1: "one", 2: "two", 3: "three", 4: "four", 5: "five", 6: "six",
    7: "seven", 8: "eight", 9: "nine", 10: "ten",
}


class UnparseableCommand(ValueError):
    """Raised when a command does not match the slot grammar."""

    def __init__(self, message: str, span: str):
        super().__init__(f"{message}: {span!r}")
        self.span = span


@dataclass(frozen=True)
class CommandSpec:
    """Slot-grammar intent of a command.

    move: direction + magnitude (meters). turn: direction + magnitude
    (degrees, one of 15/45/90). implicit_locate: relation + distance (meters),
    the speaker states their position and expects the robot to come over.
    """

    intent: str
    direction: str | None = None
    magnitude: float | None = None
    relation: str | None = None
    distance: float | None = None

    def __post_init__(self):
        if self.intent == "move":
            if self.direction not in MOVE_DIRECTIONS:
                raise ValueError(f"bad move direction: {self.direction}")
            if self.magnitude is None or self.magnitude <= 0:
                raise ValueError("move magnitude must be positive meters")
        elif self.intent == "turn":
            if self.direction not in TURN_DIRECTIONS:
                raise ValueError(f"bad turn direction: {self.direction}")
            if self.magnitude not in TURN_MAGNITUDES:
                raise ValueError(f"turn magnitude must be one of {TURN_MAGNITUDES}")
        elif self.intent == "implicit_locate":
            if self.relation not in RELATIONS:
                raise ValueError(f"bad relation: {self.relation}")
            if self.distance is None or self.distance <= 0:
                raise ValueError("implicit distance must be positive meters")
        else:
            raise ValueError(f"unknown intent: {self.intent}")


def sample_spec(rng: np.random.Generator) -> CommandSpec:
    """Draw a spec: intents weighted 0.6/0.3/0.1, uniform over legal slots."""
    u = rng.random()
    if u < 0.6:
        return CommandSpec(
            intent="move",
            direction=MOVE_DIRECTIONS[rng.integers(len(MOVE_DIRECTIONS))],
            magnitude=float(MOVE_DISTANCES_M[rng.integers(len(MOVE_DISTANCES_M))]),
        )
    if u < 0.9:
        return CommandSpec(
            intent="turn",
            direction=TURN_DIRECTIONS[rng.integers(len(TURN_DIRECTIONS))],
            magnitude=TURN_MAGNITUDES[rng.integers(len(TURN_MAGNITUDES))],
        )
    return CommandSpec(
        intent="implicit_locate",
        relation=RELATIONS[rng.integers(len(RELATIONS))],
        distance=float(IMPLICIT_DISTANCES_M[rng.integers(len(IMPLICIT_DISTANCES_M))]),
    )


# ---------------------------------------------------------------------------
# Surface realization


def _number(n: float, as_word: bool) -> str:
    i = int(round(n))
    if as_word and i in _NUMBER_WORDS:
        return _NUMBER_WORDS[i]
    return str(i)


_MOVE_VERBS = ("Move", "Go", "Advance", "Proceed", "Travel", "Head", "March", "Progress")
_FWD_WORDS = ("forward", "ahead", "frontward", "straight ahead", "onward")
_BWD_WORDS = ("backward", "back", "backwards")

_AXIAL_PATTERNS = (
    "{verb} {dir} {n} meters",
    "{verb} {n} meters {dir}",
    "{verb} {dir} a distance of {n} meters",
    "Make a {adj} movement of {n} meters",
    "{verb} {n} meters in a {adj} path",
)

_SIDE_PATTERNS = (
    "{verb} {n} meters to the {side}",
    "{verb} {side} {n} meters",
    "{verb} {n} meters to the {side} side",
    "Take a {n} meter step to the {side}",
    "{verb} {n} meters towards your {side}",
    "Make a {side}ward movement of {n} meters",
    "Position yourself {n} meters to the {side}",
    "{verb} {n} meters in a {side}ward direction",
)

_TURN_VERBS = ("Turn", "Rotate", "Pivot", "Veer")
_SLIGHT_MODS = (
    "slightly", "a smidge", "a bit", "a little", "a tiny bit",
    "a little bit", "subtly", "a small amount",
)
_SLIGHT_PATTERNS = (
    "{verb} {mod} {side}",
    "{verb} {mod} to the {side}",
    "Shift {mod} to the {side}",
    "Move {mod} {side}",
    "Make a slight {side}ward adjustment",
    "Adjust your position {mod} to the {side}",
)
_PLAIN_PATTERNS = (
    "{verb} {side}",
    "{verb} to the {side}",
    "Make a {side} turn",
    "{verb} {side}ward",
)
_SHARP_PATTERNS = (
    "{verb} sharply {side}",
    "{verb} hard {side}",
    "Make a sharp {side} turn",
    "{verb} sharply to the {side}",
)

_REL_PHRASES = {
    "behind": ("behind you", "right behind you"),
    "in_front": ("in front of you", "ahead of you"),
    "left": ("on your left", "to your left"),
    "right": ("on your right", "to your right"),
}
_IMPLICIT_PATTERNS = (
    "I am standing {rel} {n} meters",
    "I am {n} meters {rel}",
    "I am standing {rel} with a distance of {n} meters",
    "I am waiting {n} meters {rel}",
    "I am located {rel} at {n} meters",
)


def surface_candidates(spec: CommandSpec) -> list[str]:
    """All surface strings the realization grammar can produce for a spec."""
    out: list[str] = []
    if spec.intent == "move":
        for as_word in (False, True):
            n = _number(spec.magnitude, as_word)
            if spec.direction in ("forward", "backward"):
                words = _FWD_WORDS if spec.direction == "forward" else _BWD_WORDS
                for pattern in _AXIAL_PATTERNS:
                    for verb in _MOVE_VERBS:
                        for d in words:
                            out.append(
                                pattern.format(verb=verb, dir=d, n=n, adj=spec.direction)
                            )
            else:
                for pattern in _SIDE_PATTERNS:
                    for verb in _MOVE_VERBS:
                        out.append(pattern.format(verb=verb, n=n, side=spec.direction))
    elif spec.intent == "turn":
        side = spec.direction
        if spec.magnitude == 15.0:
            for pattern in _SLIGHT_PATTERNS:
                for verb in _TURN_VERBS:
                    for mod in _SLIGHT_MODS:
                        out.append(pattern.format(verb=verb, mod=mod, side=side))
        elif spec.magnitude == 45.0:
            for pattern in _PLAIN_PATTERNS:
                for verb in _TURN_VERBS:
                    out.append(pattern.format(verb=verb, side=side))
        else:
            for pattern in _SHARP_PATTERNS:
                for verb in _TURN_VERBS:
                    out.append(pattern.format(verb=verb, side=side))
    else:
        for as_word in (False, True):
            n = _number(spec.distance, as_word)
            for pattern in _IMPLICIT_PATTERNS:
                for rel in _REL_PHRASES[spec.relation]:
                    out.append(pattern.format(rel=rel, n=n))
    seen = set()
    unique = []
    for s in out:
        if s not in seen:
            seen.add(s)
            unique.append(s)
    return unique


def render(spec: CommandSpec, rng: np.random.Generator) -> str:
    """One surface string for a spec, drawn uniformly from the candidates."""
    candidates = surface_candidates(spec)
    return candidates[rng.integers(len(candidates))]


# ---------------------------------------------------------------------------
# Parsing


def _first(tokens: list[str], keywords) -> str | None:
    for tok in tokens:
        if tok in keywords:
            return tok
    return None


def _numbers(tokens: list[str]) -> list[float]:
    vals = []
    for tok in tokens:
        if tok.isdigit():
            vals.append(float(tok))
    return vals


def parse_command(standardized: str) -> CommandSpec:
    """Recover the CommandSpec from standardized text.

    Raises UnparseableCommand naming the unmatched span when the text does
    not fit the grammar.
    """
    tokens = standardized.split()
    if not tokens:
        raise UnparseableCommand("empty command", standardized)
    nums = _numbers(tokens)

    if "i" in tokens and "am" in tokens:
        rel = None
        if "behind" in tokens:
            rel = "behind"
        elif "front" in tokens or "ahead" in tokens or "forward" in tokens:
            rel = "in_front"
        elif "left" in tokens:
            rel = "left"
        elif "right" in tokens:
            rel = "right"
        if rel is None:
            raise UnparseableCommand("no relation in implicit command", standardized)
        if not nums:
            raise UnparseableCommand("no distance in implicit command", standardized)
        return CommandSpec(intent="implicit_locate", relation=rel, distance=nums[0])

    if nums and "degrees" in tokens:
        side = _first(tokens, TURN_DIRECTIONS)
        if side is None:
            raise UnparseableCommand("no turn direction", standardized)
        if nums[0] not in TURN_MAGNITUDES:
            raise UnparseableCommand("turn angle outside grammar", standardized)
        return CommandSpec(intent="turn", direction=side, magnitude=nums[0])

    if nums:
        direction = _first(tokens, MOVE_DIRECTIONS)
        if direction is None:
            raise UnparseableCommand("no direction in move command", standardized)
        if nums[0] <= 0:
            raise UnparseableCommand("non-positive distance", standardized)
        return CommandSpec(intent="move", direction=direction, magnitude=nums[0])

    side = _first(tokens, TURN_DIRECTIONS)
    if side is None:
        raise UnparseableCommand("no direction in turn command", standardized)
    if "slightly" in tokens:
        magnitude = 15.0
    elif "sharply" in tokens:
        magnitude = 90.0
    else:
        magnitude = 45.0
    return CommandSpec(intent="turn", direction=side, magnitude=magnitude)


def parse_raw(raw: str) -> CommandSpec:
    """Standardize then parse; convenience for intent checks on raw text."""
    return parse_command(standardize(raw))
