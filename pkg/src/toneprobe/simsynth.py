"""Deterministic tone-contour and audio simulator.

Stands in for a neural synthesizer as a ground-truth oracle: it renders
surface-tone syllable sequences as f0 contours from five-point tone
templates (cubic-interpolated, semitones re a speaker base), with two
controllable coarticulation mechanisms:

* carry-over (assimilatory): a syllable's onset is shifted by
  ``kappa * (previous realized offset - intrinsic onset)``, the shift
  decaying linearly to zero at ``carry_decay_frac`` of the syllable;
* anticipatory (dissimilatory): when the following tone's template onset is
  Low, the whole syllable is raised by ``delta_st``, so its f0 maximum
  rises by exactly that amount.

Alongside the f0 track the simulator emits the exact syllable TextGrid, a
harmonic-source audio rendering, and a synthetic one-hot attention matrix,
so every downstream analysis step can be validated against known truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from toneprobe.pinyin import Syllable, format_syllable
from toneprobe.speech_io import (
    AttentionMatrix,
    AudioBuffer,
    F0Track,
    Interval,
    IntervalTier,
    TextGrid,
)

#: Five-point tone shapes in semitones re the speaker base. Onset/offset
#: classes follow the tone table (T1 High->High, T2 Low->High, T3 Low->Low
#: with an interior dip, T4 High->Low). Levels are implementation choices:
#: onsets are widely separated and offsets kept moderate so that carry-over
#: shifts at kappa=0.5 never flip a measured onset across the class
#: threshold.
DEFAULT_TEMPLATE_SHAPES: dict[int, tuple[float, ...]] = {
    1: (6.0, 5.5, 5.0, 4.5, 4.0),
    2: (-7.0, -8.0, -3.5, 1.5, 5.5),
    3: (-6.0, -9.0, -10.0, -8.0, -4.0),
    4: (7.0, 5.5, 1.5, -2.0, -5.0),
}

SYMBOL_TIER = "symbols"


class SynthError(ValueError):
    pass


class ToneTemplates:
    """Cubic-interpolated five-point templates for tones 1..4."""

    def __init__(self, shapes: dict[int, tuple[float, ...]] | None = None):
        shapes = dict(shapes) if shapes is not None else dict(DEFAULT_TEMPLATE_SHAPES)
        if set(shapes) != {1, 2, 3, 4}:
            raise SynthError("templates must cover exactly tones 1..4")
        self.shapes = {t: tuple(float(v) for v in shapes[t]) for t in (1, 2, 3, 4)}
        self._splines = {}
        knots = np.linspace(0.0, 1.0, 5)
        for tone, shape in self.shapes.items():
            if len(shape) != 5:
                raise SynthError(f"tone {tone}: template needs 5 points")
            self._splines[tone] = CubicSpline(knots, shape, bc_type="natural")
        self._check_classes()

    def _check_classes(self):
        t1, t2, t3, t4 = (self.shapes[t] for t in (1, 2, 3, 4))
        if not (t1[0] >= 0 and t1[-1] >= 0):
            raise SynthError("tone 1 must be High onset and High offset")
        if not (t2[0] < 0 <= t2[-1]):
            raise SynthError("tone 2 must be Low onset and High offset")
        if not (t3[0] < 0 and t3[-1] < 0 and min(t3) < min(t3[0], t3[-1])):
            raise SynthError("tone 3 must be Low/Low with an interior dip")
        if not (t4[0] >= 0 and t4[-1] < 0):
            raise SynthError("tone 4 must be High onset and Low offset")

    def curve(self, tone: int, tau) -> np.ndarray:
        return self._splines[tone](np.asarray(tau, dtype=np.float64))

    def onset(self, tone: int) -> float:
        return self.shapes[tone][0]

    def offset(self, tone: int) -> float:
        return self.shapes[tone][-1]

    def onset_is_low(self, tone: int) -> bool:
        return self.onset(tone) < 0.0


@dataclass(frozen=True)
class CoartConfig:
    kappa: float = 0.5  # carry-over assimilation gain
    carry_decay_frac: float = 0.6  # onset shift decays to 0 at this point
    delta_st: float = 1.0  # anticipatory raise before Low onsets

    def validate(self) -> None:
        if not 0 <= self.kappa <= 1:
            raise SynthError(f"kappa must be in [0, 1], got {self.kappa}")
        if not 0 < self.carry_decay_frac <= 1:
            raise SynthError(
                f"carry_decay_frac must be in (0, 1], got {self.carry_decay_frac}"
            )
        if self.delta_st < 0:
            raise SynthError(f"delta_st must be non-negative, got {self.delta_st}")


def synth_contour(
    seq: list[Syllable],
    templates: ToneTemplates | None = None,
    coart: CoartConfig | None = None,
    syllable_dur: float = 0.25,
    base_hz: float = 220.0,
    frame_step: float = 0.01,
) -> tuple[F0Track, TextGrid]:
    """Render surface tones to an f0 track plus an exact syllable TextGrid.

    The input must already carry surface tones (apply sandhi upstream for
    underlying forms); the neutral tone is not rendered.
    """
    seq = list(seq)
    templates = templates or ToneTemplates()
    coart = coart or CoartConfig()
    coart.validate()
    if not seq:
        raise SynthError("empty syllable sequence")
    if syllable_dur <= 0 or base_hz <= 0 or frame_step <= 0:
        raise SynthError("syllable_dur, base_hz and frame_step must be positive")
    tones = [s.tone for s in seq]
    if any(t == 0 for t in tones):
        raise SynthError("neutral tone (0) has no template; surface tones only")

    n = len(seq)
    # anticipatory raise: applies when the following template onset is Low
    raise_st = [
        coart.delta_st if i < n - 1 and templates.onset_is_low(tones[i + 1]) else 0.0
        for i in range(n)
    ]
    # the carry source is the previous syllable's realized end value; the
    # carry shift itself has fully decayed by then, so only the anticipatory
    # raise moves it off the template offset
    carry_shift = [0.0] * n
    for i in range(1, n):
        prev_offset = templates.offset(tones[i - 1]) + raise_st[i - 1]
        carry_shift[i] = coart.kappa * (prev_offset - templates.onset(tones[i]))

    total = n * syllable_dur
    n_frames = int(round(total / frame_step))
    times = np.arange(n_frames) * frame_step
    idx = np.minimum((times / syllable_dur).astype(int), n - 1)
    tau = times / syllable_dur - idx

    st = np.empty(n_frames)
    for i in range(n):
        sel = idx == i
        if not np.any(sel):
            continue
        local = tau[sel]
        decay = np.maximum(0.0, 1.0 - local / coart.carry_decay_frac)
        st[sel] = (
            templates.curve(tones[i], local) + carry_shift[i] * decay + raise_st[i]
        )

    f0 = base_hz * 2.0 ** (st / 12.0)
    track = F0Track(times=times, f0=f0, voiced=np.ones(n_frames, dtype=bool))

    intervals = [
        Interval(i * syllable_dur, (i + 1) * syllable_dur, format_syllable(s))
        for i, s in enumerate(seq)
    ]
    tier = IntervalTier(SYMBOL_TIER, 0.0, total, intervals)
    grid = TextGrid(0.0, total, [tier])
    return track, grid


N_HARMONICS = 6
PEAK_AMPLITUDE = 0.3
EDGE_FADE_S = 0.005


def synth_audio(track: F0Track, sample_rate: int = 22050) -> AudioBuffer:
    """Render a track as a 6-harmonic source with 1/k amplitudes.

    Frequency follows the track phase-continuously inside each voiced span;
    unvoiced spans are silence. The waveform peak is normalized to 0.3.
    """
    if sample_rate <= 0:
        raise SynthError("sample_rate must be positive")
    n_frames = len(track.times)
    if n_frames == 0:
        return AudioBuffer(np.zeros(0), sample_rate)
    step = float(np.median(np.diff(track.times))) if n_frames > 1 else 0.01
    total = float(track.times[-1]) + step
    n = int(round(total * sample_rate))
    out = np.zeros(n)

    voiced = track.voiced.astype(bool)
    spans = []
    start = None
    for i, v in enumerate(voiced):
        if v and start is None:
            start = i
        elif not v and start is not None:
            spans.append((start, i))
            start = None
    if start is not None:
        spans.append((start, n_frames))

    for lo, hi in spans:
        t0 = track.times[lo] - 0.5 * step
        t1 = track.times[hi - 1] + 0.5 * step
        s0 = max(0, int(round(t0 * sample_rate)))
        s1 = min(n, int(round(t1 * sample_rate)))
        if s1 - s0 < 2:
            continue
        tt = np.arange(s0, s1) / sample_rate
        f_inst = np.interp(tt, track.times[lo:hi], track.f0[lo:hi])
        phase = 2.0 * np.pi * np.cumsum(f_inst) / sample_rate
        wave = np.zeros_like(phase)
        for k in range(1, N_HARMONICS + 1):
            wave += np.sin(k * phase) / k
        fade_n = min(int(EDGE_FADE_S * sample_rate), (s1 - s0) // 2)
        if fade_n > 0:
            ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(fade_n) / fade_n)
            wave[:fade_n] *= ramp
            wave[-fade_n:] *= ramp[::-1]
        out[s0:s1] += wave

    peak = np.abs(out).max()
    if peak > 0:
        out *= PEAK_AMPLITUDE / peak
    return AudioBuffer(out, sample_rate)


def synth_attention(grid: TextGrid, hop: float) -> AttentionMatrix:
    """One-hot attention: frame f attends the symbol whose interval holds f*hop."""
    if hop <= 0:
        raise SynthError("hop must be positive")
    tier = grid.tier(SYMBOL_TIER)
    bounds = np.array([iv.xmin for iv in tier.intervals] + [tier.xmax])
    n_frames = int(np.ceil(grid.xmax / hop - 1e-9))
    if n_frames < 1:
        raise SynthError("grid too short for one attention frame")
    t = np.arange(n_frames) * hop
    sym = np.clip(np.searchsorted(bounds, t, side="right") - 1, 0, len(tier.intervals) - 1)
    weights = np.zeros((n_frames, len(tier.intervals)))
    weights[np.arange(n_frames), sym] = 1.0
    return AttentionMatrix(weights, hop)
