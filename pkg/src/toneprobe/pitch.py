"""Autocorrelation pitch tracking over candidate paths.

The tracker follows the classic short-term autocorrelation design: frames
are Hanning-windowed (window length three periods of the pitch floor), the
normalized autocorrelation is divided by the window's own autocorrelation,
local maxima are refined by parabolic interpolation into voiced candidates,
an unvoiced candidate is scored from the frame's amplitude, and the final
track is the best path through the per-frame candidates under octave and
voicing-transition costs, found by dynamic programming.

Parameter defaults copy the published defaults of the standard analysis
tool for this method family.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from toneprobe import _kernels
from toneprobe.speech_io import AudioBuffer, F0Track


class PitchError(ValueError):
    pass


@dataclass(frozen=True)
class PitchConfig:
    time_step: float = 0.01
    floor: float = 75.0
    ceiling: float = 600.0
    silence_threshold: float = 0.03
    voicing_threshold: float = 0.45
    octave_cost: float = 0.01
    octave_jump_cost: float = 0.35
    voiced_unvoiced_cost: float = 0.14
    max_candidates: int = 15

    def validate(self, sample_rate: float) -> None:
        if not (0 < self.floor < self.ceiling < sample_rate / 2):
            raise PitchError(
                f"need 0 < floor < ceiling < sr/2, got floor={self.floor}, "
                f"ceiling={self.ceiling}, sr={sample_rate}"
            )
        if self.time_step <= 0:
            raise PitchError("time_step must be positive")
        for name in ("silence_threshold", "voicing_threshold"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise PitchError(f"{name} must be in [0, 1], got {v}")
        if self.max_candidates < 2:
            raise PitchError("max_candidates must be at least 2")

    def as_header(self) -> dict:
        return asdict(self)


@lru_cache(maxsize=8)
def _window_tables(sample_rate: float, wlen: int, nfft: int, n_lags: int):
    window = np.hanning(wlen)
    spec = np.fft.rfft(window, nfft)
    wac = np.fft.irfft(spec.real**2 + spec.imag**2, nfft)[:n_lags]
    wac = wac / wac[0]
    return window, wac


def track_f0(audio: AudioBuffer, cfg: PitchConfig | None = None) -> F0Track:
    """Track f0 over an audio buffer; frames outside [floor, ceiling] or
    below the silence/voicing thresholds come out unvoiced."""
    cfg = cfg or PitchConfig()
    sr = float(audio.sample_rate)
    cfg.validate(sr)
    x = np.asarray(audio.samples, dtype=np.float64)
    if x.ndim != 1:
        raise PitchError("audio must be mono")

    wlen = int(round(3.0 / cfg.floor * sr))
    if len(x) < wlen:
        raise PitchError(
            f"audio shorter than one analysis window ({len(x)} < {wlen} samples)"
        )
    hop = max(1, int(round(cfg.time_step * sr)))
    n_frames = (len(x) - wlen) // hop + 1
    left = (len(x) - wlen - (n_frames - 1) * hop) // 2
    starts = left + np.arange(n_frames) * hop
    times = (starts + 0.5 * wlen) / sr

    frames = sliding_window_view(x, wlen)[starts].copy()
    frames -= frames.mean(axis=1, keepdims=True)
    local_peak = np.abs(frames).max(axis=1)
    global_peak = float(np.abs(x - x.mean()).max())

    lmin = max(2, int(np.floor(sr / cfg.ceiling)))
    lmax = int(np.ceil(sr / cfg.floor))
    n_lags = lmax + 2
    nfft = 1
    while nfft < max(int(wlen * 1.5), wlen + n_lags):
        nfft <<= 1
    window, wac = _window_tables(sr, wlen, nfft, n_lags)

    spec = np.fft.rfft(frames * window, nfft)
    ac = np.fft.irfft(spec.real**2 + spec.imag**2, nfft)[:, :n_lags]
    r0 = ac[:, 0]
    ok = r0 > 0
    rnorm = np.zeros_like(ac)
    rnorm[ok] = ac[ok] / r0[ok, None] / wac[None, :]

    max_voiced = cfg.max_candidates - 1
    freqs_v, strengths_v, counts = _kernels.extract_candidates(
        rnorm, lmin, lmax, sr, cfg.floor, cfg.ceiling, max_voiced
    )

    # local path scores: slot 0 = unvoiced, slots 1.. = voiced candidates
    with np.errstate(divide="ignore", invalid="ignore"):
        intensity = np.where(global_peak > 0, local_peak / global_peak, 0.0)
        if cfg.silence_threshold > 0:
            silence_term = 2.0 - intensity * (1.0 + cfg.voicing_threshold) / (
                cfg.silence_threshold
            )
        else:
            silence_term = np.zeros_like(intensity)
    uv_strength = cfg.voicing_threshold + np.maximum(0.0, silence_term)

    width = max_voiced + 1
    local = np.full((n_frames, width), -np.inf)
    freqs = np.zeros((n_frames, width))
    local[:, 0] = uv_strength
    voiced_scores = strengths_v - cfg.octave_cost * np.log2(
        cfg.ceiling / np.where(freqs_v > 0, freqs_v, cfg.ceiling)
    )
    slot = np.arange(max_voiced)[None, :]
    has = slot < counts[:, None]
    local[:, 1:][has] = voiced_scores[has]
    freqs[:, 1:][has] = freqs_v[has]
    nstates = counts + 1

    path = _kernels.viterbi_path(
        local, freqs, nstates, cfg.octave_jump_cost, cfg.voiced_unvoiced_cost
    )

    voiced = path > 0
    f0 = np.where(voiced, freqs[np.arange(n_frames), path], np.nan)
    return F0Track(times=times, f0=f0, voiced=voiced)


def f0_for_interval(track: F0Track, t0: float, t1: float) -> np.ndarray:
    """Voiced f0 samples with t0 <= time < t1, in track order."""
    if not t0 < t1:
        raise ValueError(f"need t0 < t1, got [{t0}, {t1})")
    mask = track.voiced & (track.times >= t0) & (track.times < t1)
    return track.f0[mask]
