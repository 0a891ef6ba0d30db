"""Toolkit for probing tonal behavior of Mandarin speech synthesizers.

Covers stimulus generation for tonal coarticulation experiments, cyclic
Tone-3 sandhi application and scoring, WAV/TextGrid/attention/f0 file I/O,
autocorrelation pitch tracking, LOESS-based contour analysis with tone
classification, rank statistics for listening-test data, and a deterministic
contour simulator used as a ground-truth oracle in place of a neural TTS.
"""

__version__ = "0.1.0"

from toneprobe.pinyin import Syllable, parse_pinyin, format_pinyin
from toneprobe.sandhi import (
    Leaf,
    Word,
    parse_bracketed,
    apply_sandhi,
    enumerate_surface_forms,
    count_sandhi_errors,
)

__all__ = [
    "Syllable",
    "parse_pinyin",
    "format_pinyin",
    "Leaf",
    "Word",
    "parse_bracketed",
    "apply_sandhi",
    "enumerate_surface_forms",
    "count_sandhi_errors",
]
