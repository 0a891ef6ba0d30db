"""Tone-digit Pinyin parsing and formatting.

A syllable token is an optional initial, a non-empty final, and a tone digit:
``ma3``, ``zhuang1``, ``a1``. Tone 0 is the neutral tone; ``5`` is accepted on
input as an alias and normalized to 0. ``ü`` may be written as ``ü`` or ``v``
and is stored as ``v``. Validation is structural (initial from the canonical
list, final non-empty with at least one vowel letter); pass a syllabary set
for strict-mode validation against a fixed inventory.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

# The 21 Mandarin initials. Parsing is longest-match, so the digraphs
# zh/ch/sh take precedence over z/c/s.
INITIALS = (
    "b", "p", "m", "f", "d", "t", "n", "l",
    "g", "k", "h", "j", "q", "x",
    "zh", "ch", "sh", "r", "z", "c", "s",
)

_VOWELS = set("aeiouv")
_TOKEN_RE = re.compile(r"^([a-zv]+)([0-5])$")


class PinyinError(ValueError):
    """Malformed tone-digit Pinyin input."""

    def __init__(self, message: str, token_index: int | None = None):
        if token_index is not None:
            message = f"token {token_index}: {message}"
        super().__init__(message)
        self.token_index = token_index


@dataclass(frozen=True)
class Syllable:
    """One Pinyin syllable: initial (possibly empty), final, tone 0..4."""

    initial: str
    final: str
    tone: int

    def __post_init__(self):
        if self.tone not in (0, 1, 2, 3, 4):
            raise PinyinError(f"tone must be in 0..4, got {self.tone!r}")
        if not self.final:
            raise PinyinError("final must be non-empty")
        if self.initial and self.initial not in INITIALS:
            raise PinyinError(f"unknown initial {self.initial!r}")

    def with_tone(self, tone: int) -> "Syllable":
        return Syllable(self.initial, self.final, tone)


def normalize_text(text: str) -> str:
    """Lowercase, map ü to v, collapse whitespace."""
    return " ".join(text.lower().replace("ü", "v").split())


def split_initial(body: str) -> tuple[str, str]:
    """Split the segmental body into (initial, final), longest match first."""
    for n in (2, 1):
        head = body[:n]
        if head in INITIALS and len(body) > n:
            return head, body[n:]
    return "", body


def parse_syllable(token: str, index: int | None = None,
                   syllabary: set[str] | None = None) -> Syllable:
    """Parse one ``<body><tone-digit>`` token."""
    m = _TOKEN_RE.match(token)
    if not m:
        raise PinyinError(f"malformed token {token!r}", index)
    body, digit = m.groups()
    tone = int(digit)
    if tone == 5:
        tone = 0
    initial, final = split_initial(body)
    if not any(c in _VOWELS for c in final):
        raise PinyinError(f"empty or vowel-less rime in {token!r}", index)
    if syllabary is not None and body not in syllabary:
        raise PinyinError(f"{body!r} not in syllabary", index)
    return Syllable(initial, final, tone)


def parse_pinyin(text: str, syllabary: set[str] | None = None) -> list[Syllable]:
    """Parse whitespace-separated tone-digit Pinyin into a syllable list."""
    tokens = normalize_text(text).split()
    if not tokens:
        raise PinyinError("empty input")
    return [parse_syllable(tok, i, syllabary) for i, tok in enumerate(tokens)]


def format_syllable(syllable: Syllable) -> str:
    return f"{syllable.initial}{syllable.final}{syllable.tone}"


def format_pinyin(seq: list[Syllable]) -> str:
    """Inverse of :func:`parse_pinyin`; rejects empty sequences."""
    seq = list(seq)
    if not seq:
        raise PinyinError("cannot format an empty syllable sequence")
    return " ".join(format_syllable(s) for s in seq)


def load_syllabary(path) -> set[str]:
    """Read a strict-mode syllabary: one toneless syllable body per line."""
    entries: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip().lower().replace("ü", "v")
            if line and not line.startswith("#"):
                entries.add(line)
    return entries
