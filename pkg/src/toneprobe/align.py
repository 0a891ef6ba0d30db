"""Greedy conversion of attention matrices to time-aligned TextGrids.

Each decoder frame is assigned the argmax input symbol (earliest index on
ties); monotonicity is then enforced with a running maximum, so assignments
never move backward. A symbol's interval spans its first through last
assigned frame. Symbols that end up with no frames are dropped from the
grid; ``validate_alignment`` surfaces them, mirroring the manual inspection
step such alignments normally get.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from toneprobe.pinyin import Syllable, format_syllable
from toneprobe.speech_io import (
    AttentionMatrix,
    Interval,
    IntervalTier,
    TextGrid,
    validate_attention,
)

SYMBOL_TIER = "symbols"

#: 256-sample hop at 22050 Hz, used when an attention file omits its hop.
DEFAULT_HOP_S = 256 / 22050


class AlignmentError(ValueError):
    pass


@dataclass
class AlignmentReport:
    ok: bool
    issues: list[str] = field(default_factory=list)


def greedy_alignment(att: AttentionMatrix, symbols: list[str]) -> TextGrid:
    """Segment [0, F*hop] into one interval per reached symbol."""
    validate_attention(att)
    n_frames, n_symbols = att.weights.shape
    if len(symbols) != n_symbols:
        raise AlignmentError(
            f"{len(symbols)} labels for {n_symbols} attention columns"
        )
    if n_symbols == 0:
        raise AlignmentError("no symbols")
    if n_frames < n_symbols:
        raise AlignmentError(
            f"need at least one frame per symbol ({n_frames} < {n_symbols})"
        )

    assigned = np.maximum.accumulate(np.argmax(att.weights, axis=1))
    hop = att.hop
    intervals: list[Interval] = []
    start = 0
    for k in range(1, n_frames + 1):
        if k == n_frames or assigned[k] != assigned[start]:
            sym = int(assigned[start])
            intervals.append(Interval(start * hop, k * hop, symbols[sym]))
            start = k
    xmax = n_frames * hop
    tier = IntervalTier(SYMBOL_TIER, 0.0, xmax, intervals)
    return TextGrid(0.0, xmax, [tier])


def _expected_labels(expected) -> list[str]:
    out = []
    for item in expected:
        out.append(format_syllable(item) if isinstance(item, Syllable) else str(item))
    return out


def validate_alignment(grid: TextGrid, expected) -> AlignmentReport:
    """Check a symbols tier against the expected label sequence.

    Issues are reported as ``unreached:<idx>`` (expected symbol missing),
    ``label:<idx>`` (mismatching label), and ``duration:<idx>``
    (zero or negative interval length).
    """
    expected = _expected_labels(expected)
    issues: list[str] = []
    try:
        tier = grid.tier(SYMBOL_TIER)
    except KeyError:
        return AlignmentReport(False, [f"missing tier '{SYMBOL_TIER}'"])

    labels = [iv.label for iv in tier.intervals]
    for k, iv in enumerate(tier.intervals):
        if iv.xmax - iv.xmin <= 0:
            issues.append(f"duration:{k}")

    # Walk the expected sequence; greedy output can only drop symbols,
    # so labels should be an in-order subsequence of the expectation.
    gi = 0
    matched = [False] * len(expected)
    for ei, want in enumerate(expected):
        if gi < len(labels) and labels[gi] == want:
            matched[ei] = True
            gi += 1
    if gi == len(labels):
        for ei, got in enumerate(matched):
            if not got:
                issues.append(f"unreached:{ei}")
    else:
        # not a subsequence: report positionwise label mismatches instead
        for ei in range(max(len(expected), len(labels))):
            want = expected[ei] if ei < len(expected) else None
            got = labels[ei] if ei < len(labels) else None
            if want != got:
                issues.append(f"label:{ei}")

    return AlignmentReport(not issues, issues)
