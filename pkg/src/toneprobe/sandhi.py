"""Cyclic Tone-3 sandhi over prosodic-word bracketings.

The rewrite is applied bottom-up: at each word node the children's current
surface tones are concatenated and scanned left to right, turning each
adjacent (3, 3) pair into (2, 3) immediately, so the scan sees its own
earlier rewrites. A flat run of n third tones therefore surfaces as
2^(n-1) 3. Only tone values ever change; segments are preserved.

When no bracketing is known, ``enumerate_surface_forms`` returns the set of
outcomes over all binary bracketings of the sequence, which models surface
variation due to speaker choice.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Union

from toneprobe.pinyin import Syllable, format_syllable, parse_syllable

#: Refuse enumeration beyond this many syllables (Catalan growth).
DEFAULT_ENUMERATION_CAP = 12


class BracketError(ValueError):
    """Malformed bracket notation or invalid prosodic tree."""


class EnumerationLimitError(ValueError):
    """Sequence exceeds the combinatorial limit for bracketing enumeration."""


@dataclass(frozen=True)
class Leaf:
    syllable: Syllable


@dataclass(frozen=True)
class Word:
    children: tuple["Node", ...]

    def __post_init__(self):
        if not self.children:
            raise BracketError("word node must have at least one child")


Node = Union[Leaf, Word]

SurfaceForm = tuple[int, ...]


def leaves(tree: Node) -> list[Syllable]:
    """Flatten a tree left to right into its syllables."""
    if isinstance(tree, Leaf):
        return [tree.syllable]
    out: list[Syllable] = []
    for child in tree.children:
        out.extend(leaves(child))
    return out


def parse_bracketed(text: str, syllabary: set[str] | None = None) -> Node:
    """Parse bracket notation like ``[[meng3 gu3] yu3]`` into a tree.

    A bare token list with no brackets parses as one flat word.
    """
    tokens = text.replace("[", " [ ").replace("]", " ] ").split()
    if not tokens:
        raise BracketError("empty input")

    pos = 0

    def parse_node() -> Node:
        nonlocal pos
        tok = tokens[pos]
        if tok == "[":
            pos += 1
            children: list[Node] = []
            while pos < len(tokens) and tokens[pos] != "]":
                children.append(parse_node())
            if pos >= len(tokens):
                raise BracketError("unbalanced brackets: missing ']'")
            pos += 1  # consume "]"
            if not children:
                raise BracketError("empty word '[]'")
            return Word(tuple(children))
        if tok == "]":
            raise BracketError("unbalanced brackets: unexpected ']'")
        pos += 1
        return Leaf(parse_syllable(tok, syllabary=syllabary))

    items: list[Node] = []
    while pos < len(tokens):
        items.append(parse_node())
    if len(items) == 1 and isinstance(items[0], Word):
        return items[0]
    return Word(tuple(items))


def format_tree(tree: Node) -> str:
    if isinstance(tree, Leaf):
        return format_syllable(tree.syllable)
    return "[" + " ".join(format_tree(c) for c in tree.children) + "]"


def apply_sandhi(tree: Node) -> SurfaceForm:
    """Surface tones after cyclic bottom-up Tone-3 sandhi."""

    def walk(node: Node) -> list[int]:
        if isinstance(node, Leaf):
            return [node.syllable.tone]
        tones: list[int] = []
        for child in node.children:
            tones.extend(walk(child))
        for i in range(len(tones) - 1):
            if tones[i] == 3 and tones[i + 1] == 3:
                tones[i] = 2
        return tones

    return tuple(walk(tree))


def surface_syllables(tree: Node) -> list[Syllable]:
    """Leaves of the tree with sandhi-derived surface tones."""
    tones = apply_sandhi(tree)
    return [s.with_tone(t) for s, t in zip(leaves(tree), tones)]


def _bracketings(syllables: tuple[Syllable, ...]) -> Iterator[Node]:
    """All binary bracketings over the sequence (Catalan enumeration)."""

    @lru_cache(maxsize=None)
    def span(i: int, j: int) -> tuple[Node, ...]:
        if j - i == 1:
            return (Leaf(syllables[i]),)
        out: list[Node] = []
        for k in range(i + 1, j):
            for left in span(i, k):
                for right in span(k, j):
                    out.append(Word((left, right)))
        return tuple(out)

    yield from span(0, len(syllables))


def enumerate_surface_forms(
    seq: list[Syllable],
    structure: Node | None = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> tuple[SurfaceForm, ...]:
    """Licit surface forms of a syllable sequence, sorted and deduplicated.

    With a known structure the result is the singleton ``apply_sandhi``
    output; without one, every binary bracketing is tried.
    """
    seq = list(seq)
    if not seq:
        raise ValueError("empty syllable sequence")
    if structure is not None:
        struct_leaves = leaves(structure)
        if struct_leaves != seq:
            raise ValueError("structure leaves do not match the sequence")
        return (apply_sandhi(structure),)
    if len(seq) > cap:
        raise EnumerationLimitError(
            f"combinatorial limit: {len(seq)} syllables exceeds cap {cap}"
        )
    forms = {apply_sandhi(tree) for tree in _bracketings(tuple(seq))}
    return tuple(sorted(forms))


def count_sandhi_errors(realized: SurfaceForm, oracle) -> int:
    """Minimum positionwise tone mismatch against any oracle form."""
    oracle = tuple(oracle)
    if not oracle:
        raise ValueError("empty oracle form set")
    realized = tuple(realized)
    for form in oracle:
        if len(form) != len(realized):
            raise ValueError(
                f"length mismatch: realized {len(realized)} vs oracle {len(form)}"
            )
    return min(
        sum(1 for a, b in zip(realized, form) if a != b) for form in oracle
    )


def oracle_to_json_line(sample_id: str, forms) -> str:
    """Serialize an oracle form set as one JSON line."""
    return json.dumps(
        {"id": sample_id, "forms": [list(f) for f in forms]},
        ensure_ascii=False,
    )


def oracle_from_json_line(line: str) -> tuple[str, tuple[SurfaceForm, ...]]:
    obj = json.loads(line)
    forms = tuple(tuple(int(t) for t in f) for f in obj["forms"])
    return str(obj["id"]), forms
