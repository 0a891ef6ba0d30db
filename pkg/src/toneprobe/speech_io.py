"""Readers and writers for WAV, Praat TextGrid, attention, and f0 files.

All four formats round-trip exactly on valid data. Numeric text uses a
``.`` decimal separator with six decimals. Audio support is deliberately
narrow: RIFF/WAVE, 16-bit PCM, mono. TextGrids are Praat's long text
format with interval tiers only.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass, field

import numpy as np

TIME_TOL = 1e-6


class FileFormatError(ValueError):
    """File content violates the expected format."""


# --------------------------------------------------------------------------
# WAV

@dataclass
class AudioBuffer:
    samples: np.ndarray  # float64 in [-1, 1]
    sample_rate: int

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def read_wav(path) -> AudioBuffer:
    try:
        with wave.open(str(path), "rb") as w:
            if w.getcomptype() != "NONE":
                raise FileFormatError(f"{path}: compressed WAV unsupported")
            if w.getnchannels() != 1:
                raise FileFormatError(f"{path}: only mono audio supported")
            if w.getsampwidth() != 2:
                raise FileFormatError(
                    f"{path}: only 16-bit PCM supported, got {8 * w.getsampwidth()}-bit"
                )
            n = w.getnframes()
            rate = w.getframerate()
            raw = w.readframes(n)
    except wave.Error as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
    if len(raw) != 2 * n:
        raise FileFormatError(f"{path}: truncated data chunk")
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return AudioBuffer(samples, rate)


def write_wav(buffer: AudioBuffer, path) -> None:
    if buffer.sample_rate <= 0:
        raise ValueError("sample_rate must be positive")
    x = np.clip(np.asarray(buffer.samples, dtype=np.float64), -1.0, 32767 / 32768)
    pcm = np.round(x * 32768.0).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(buffer.sample_rate)
        w.writeframes(pcm.tobytes())


# --------------------------------------------------------------------------
# TextGrid (Praat long text format, IntervalTier only)

@dataclass
class Interval:
    xmin: float
    xmax: float
    label: str


@dataclass
class IntervalTier:
    name: str
    xmin: float
    xmax: float
    intervals: list[Interval] = field(default_factory=list)


@dataclass
class TextGrid:
    xmin: float
    xmax: float
    tiers: list[IntervalTier] = field(default_factory=list)

    def tier(self, name: str) -> IntervalTier:
        for t in self.tiers:
            if t.name == name:
                return t
        raise KeyError(f"no tier named {name!r}")


def validate_textgrid(grid: TextGrid, tol: float = TIME_TOL) -> None:
    """Check that every tier's intervals tile [xmin, xmax] contiguously."""
    for tier in grid.tiers:
        if not tier.intervals:
            raise FileFormatError(f"tier {tier.name!r}: no intervals")
        if abs(tier.xmin - grid.xmin) > tol or abs(tier.xmax - grid.xmax) > tol:
            raise FileFormatError(f"tier {tier.name!r}: does not span the grid range")
        prev = tier.xmin
        for k, iv in enumerate(tier.intervals):
            if iv.xmax < iv.xmin - tol:
                raise FileFormatError(
                    f"tier {tier.name!r} interval {k}: negative duration"
                )
            if abs(iv.xmin - prev) > tol:
                kind = "gap" if iv.xmin > prev else "overlap"
                raise FileFormatError(
                    f"tier {tier.name!r} interval {k}: {kind} at t={prev:.6f}"
                )
            prev = iv.xmax
        if abs(prev - tier.xmax) > tol:
            raise FileFormatError(f"tier {tier.name!r}: intervals do not reach xmax")


def _quote(text: str) -> str:
    return '"' + text.replace('"', '""') + '"'


def write_textgrid(grid: TextGrid, path) -> None:
    validate_textgrid(grid)
    lines = [
        'File type = "ooTextFile"',
        'Object class = "TextGrid"',
        "",
        f"xmin = {grid.xmin:.6f}",
        f"xmax = {grid.xmax:.6f}",
        "tiers? <exists>",
        f"size = {len(grid.tiers)}",
        "item []:",
    ]
    for i, tier in enumerate(grid.tiers, start=1):
        lines += [
            f"    item [{i}]:",
            '        class = "IntervalTier"',
            f"        name = {_quote(tier.name)}",
            f"        xmin = {tier.xmin:.6f}",
            f"        xmax = {tier.xmax:.6f}",
            f"        intervals: size = {len(tier.intervals)}",
        ]
        for k, iv in enumerate(tier.intervals, start=1):
            lines += [
                f"        intervals [{k}]:",
                f"            xmin = {iv.xmin:.6f}",
                f"            xmax = {iv.xmax:.6f}",
                f"            text = {_quote(iv.label)}",
            ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


class _LineReader:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def next_value(self, key: str) -> str:
        """Scan forward to the next ``key = value`` line and return the value."""
        while self.pos < len(self.lines):
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line.startswith(key):
                rest = line[len(key):].lstrip()
                if rest.startswith("="):
                    return rest[1:].strip()
                if key.endswith(":") or not rest:
                    return rest
        raise FileFormatError(f"expected {key!r}, reached end of file")


def _unquote(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value.startswith('"') and value.endswith('"'):
        return value[1:-1].replace('""', '"')
    return value


def read_textgrid(path) -> TextGrid:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    rd = _LineReader(text)
    ftype = _unquote(rd.next_value("File type"))
    if ftype != "ooTextFile":
        raise FileFormatError(f"{path}: not a Praat text file")
    oclass = _unquote(rd.next_value("Object class"))
    if oclass != "TextGrid":
        raise FileFormatError(f"{path}: not a TextGrid")
    xmin = float(rd.next_value("xmin"))
    xmax = float(rd.next_value("xmax"))
    size = int(rd.next_value("size"))
    grid = TextGrid(xmin, xmax)
    for _ in range(size):
        klass = _unquote(rd.next_value("class"))
        if klass != "IntervalTier":
            raise FileFormatError(
                f"{path}: unsupported tier class {klass!r} (interval tiers only)"
            )
        name = _unquote(rd.next_value("name"))
        t_xmin = float(rd.next_value("xmin"))
        t_xmax = float(rd.next_value("xmax"))
        n_iv = int(rd.next_value("intervals: size"))
        tier = IntervalTier(name, t_xmin, t_xmax)
        for _ in range(n_iv):
            iv_xmin = float(rd.next_value("xmin"))
            iv_xmax = float(rd.next_value("xmax"))
            label = _unquote(rd.next_value("text"))
            tier.intervals.append(Interval(iv_xmin, iv_xmax, label))
        grid.tiers.append(tier)
    validate_textgrid(grid)
    return grid


# --------------------------------------------------------------------------
# Attention matrix (TSV with a one-line header)

@dataclass
class AttentionMatrix:
    weights: np.ndarray  # (frames, symbols), non-negative
    hop: float  # seconds per decoder frame

    @property
    def n_frames(self) -> int:
        return self.weights.shape[0]

    @property
    def n_symbols(self) -> int:
        return self.weights.shape[1]


def validate_attention(att: AttentionMatrix) -> None:
    if att.hop <= 0:
        raise FileFormatError(f"hop must be positive, got {att.hop}")
    if att.weights.ndim != 2 or att.weights.size == 0:
        raise FileFormatError("attention matrix must be a non-empty 2-D grid")
    if np.any(att.weights < 0):
        raise FileFormatError("attention weights must be non-negative")
    if np.any(~(att.weights > 0).any(axis=1)):
        bad = int(np.flatnonzero(~(att.weights > 0).any(axis=1))[0])
        raise FileFormatError(f"attention row {bad} has no positive entry")


def read_attention(path) -> AttentionMatrix:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        fields = dict(
            part.split("=", 1) for part in header.lstrip("#").split() if "=" in part
        )
        try:
            n_frames = int(fields["frames"])
            n_symbols = int(fields["symbols"])
            hop = float(fields["hop_s"])
        except (KeyError, ValueError) as exc:
            raise FileFormatError(f"{path}: bad attention header {header!r}") from exc
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            vals = line.split("\t")
            if len(vals) != n_symbols:
                raise FileFormatError(
                    f"{path}:{lineno}: expected {n_symbols} columns, got {len(vals)}"
                )
            rows.append([float(v) for v in vals])
    if len(rows) != n_frames:
        raise FileFormatError(
            f"{path}: header says {n_frames} frames but file has {len(rows)}"
        )
    att = AttentionMatrix(np.asarray(rows, dtype=np.float64), hop)
    validate_attention(att)
    return att


def write_attention(att: AttentionMatrix, path) -> None:
    validate_attention(att)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"# frames={att.n_frames} symbols={att.n_symbols} hop_s={att.hop:.6f}\n"
        )
        for row in att.weights:
            fh.write("\t".join(f"{v:.6f}" for v in row) + "\n")


# --------------------------------------------------------------------------
# f0 tracks (TSV: time_s, f0_hz or NA, voiced flag)

@dataclass
class F0Track:
    times: np.ndarray  # strictly increasing, seconds
    f0: np.ndarray  # Hz; NaN where unvoiced
    voiced: np.ndarray  # bool

    def __len__(self) -> int:
        return len(self.times)


def validate_f0(track: F0Track) -> None:
    if not (len(track.times) == len(track.f0) == len(track.voiced)):
        raise FileFormatError("f0 track arrays must have equal length")
    if np.any(np.diff(track.times) <= 0):
        raise FileFormatError("f0 track times must be strictly increasing")
    has_f0 = ~np.isnan(track.f0)
    if np.any(has_f0 != track.voiced):
        raise FileFormatError("f0 must be present exactly on voiced frames")


def write_f0(track: F0Track, path, header: dict | None = None) -> None:
    validate_f0(track)
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for key, value in header.items():
                fh.write(f"# {key}={value}\n")
        fh.write("time_s\tf0_hz\tvoiced\n")
        for t, f, v in zip(track.times, track.f0, track.voiced):
            f_text = f"{f:.6f}" if v else "NA"
            fh.write(f"{t:.6f}\t{f_text}\t{1 if v else 0}\n")


def read_f0(path) -> F0Track:
    times, f0, voiced = [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("time_s"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FileFormatError(f"{path}:{lineno}: expected 3 columns")
            times.append(float(parts[0]))
            v = parts[2] not in ("0", "false", "False")
            voiced.append(v)
            if parts[1] == "NA":
                if v:
                    raise FileFormatError(f"{path}:{lineno}: voiced frame without f0")
                f0.append(np.nan)
            else:
                if not v:
                    raise FileFormatError(f"{path}:{lineno}: unvoiced frame with f0")
                f0.append(float(parts[1]))
    track = F0Track(
        np.asarray(times, dtype=np.float64),
        np.asarray(f0, dtype=np.float64),
        np.asarray(voiced, dtype=bool),
    )
    validate_f0(track)
    return track
