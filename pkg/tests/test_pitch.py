import itertools

import numpy as np
import pytest

from toneprobe import _kernels
from toneprobe.pitch import PitchConfig, PitchError, f0_for_interval, track_f0
from toneprobe.speech_io import AudioBuffer, F0Track

SR = 22050


def sine(freq, dur=1.0, amp=0.5, sr=SR):
    t = np.arange(int(dur * sr)) / sr
    return AudioBuffer(amp * np.sin(2 * np.pi * freq * t), sr)


@pytest.mark.parametrize("freq", [100, 150, 220, 300, 400])
def test_pure_sines_within_one_percent(freq):
    track = track_f0(sine(freq))
    assert track.voiced.all()
    assert np.max(np.abs(track.f0 - freq)) / freq < 0.01


def test_silence_fully_unvoiced():
    track = track_f0(AudioBuffer(np.zeros(SR), SR))
    assert not track.voiced.any()
    assert np.isnan(track.f0).all()


def test_chirp_within_three_percent_at_frame_centers():
    t = np.arange(SR) / SR
    f_inst = 150 + 150 * t
    phase = 2 * np.pi * np.cumsum(f_inst) / SR
    track = track_f0(AudioBuffer(0.4 * np.sin(phase), SR))
    inst = 150 + 150 * track.times
    interior = (track.times > 0.1) & (track.times < 0.9)
    assert track.voiced[interior].all()
    rel = np.abs(track.f0[interior] - inst[interior]) / inst[interior]
    assert np.max(rel) < 0.03


def test_f0_bounded_by_floor_and_ceiling():
    # noisy signal: whatever comes out voiced must stay inside the range
    rng = np.random.default_rng(3)
    x = rng.normal(0, 0.2, SR) + 0.3 * np.sin(2 * np.pi * 180 * np.arange(SR) / SR)
    cfg = PitchConfig(floor=75, ceiling=400)
    track = track_f0(AudioBuffer(x, SR), cfg)
    v = track.f0[track.voiced]
    assert np.all(v >= cfg.floor) and np.all(v <= cfg.ceiling)


def test_amplitude_invariance():
    base = track_f0(sine(220, amp=0.5))
    scaled = track_f0(sine(220, amp=0.05))
    assert np.array_equal(base.voiced, scaled.voiced)
    rel = np.abs(base.f0[base.voiced] - scaled.f0[scaled.voiced]) / base.f0[base.voiced]
    assert np.max(rel) < 1e-3


def test_low_amplitude_below_silence_threshold_unvoiced():
    # a tone 40 dB below an adjacent loud section falls under the silence gate
    t = np.arange(SR) / SR
    loud = 0.9 * np.sin(2 * np.pi * 220 * t[: SR // 2])
    faint = 0.002 * np.sin(2 * np.pi * 220 * t[: SR // 2])
    track = track_f0(AudioBuffer(np.concatenate([loud, faint]), SR))
    mid = len(track.times) // 2
    assert track.voiced[: mid - 5].all()
    assert not track.voiced[mid + 5 :].any()


def test_too_short_audio_raises():
    with pytest.raises(PitchError, match="shorter than one analysis window"):
        track_f0(AudioBuffer(np.zeros(100), SR))


def test_invalid_config_rejected():
    with pytest.raises(PitchError):
        track_f0(sine(220), PitchConfig(floor=500, ceiling=400))
    with pytest.raises(PitchError):
        track_f0(sine(220), PitchConfig(ceiling=20000))  # above Nyquist
    with pytest.raises(PitchError):
        track_f0(sine(220), PitchConfig(voicing_threshold=1.5))


def test_f0_for_interval_subsetting():
    times = np.array([0.0, 0.01, 0.02, 0.03, 0.04])
    f0 = np.array([200.0, 201.0, np.nan, 203.0, 204.0])
    voiced = np.array([True, True, False, True, True])
    track = F0Track(times, f0, voiced)
    assert np.array_equal(f0_for_interval(track, 0.01, 0.04), [201.0, 203.0])
    assert f0_for_interval(track, 0.05, 0.10).size == 0
    with pytest.raises(ValueError):
        f0_for_interval(track, 0.04, 0.04)


def brute_force_path(local, freqs, nstates, ojc, vuc):
    n_frames = local.shape[0]
    best_cost, best_path = -np.inf, None
    for combo in itertools.product(*[range(nstates[f]) for f in range(n_frames)]):
        cost = sum(local[f, j] for f, j in enumerate(combo))
        for f in range(1, n_frames):
            f1, f2 = freqs[f - 1, combo[f - 1]], freqs[f, combo[f]]
            if f1 > 0 and f2 > 0:
                cost -= ojc * abs(np.log2(f1 / f2))
            elif (f1 > 0) != (f2 > 0):
                cost -= vuc
        if cost > best_cost:
            best_cost, best_path = cost, combo
    return best_cost, np.array(best_path)


def test_dp_matches_exhaustive_enumeration():
    rng = np.random.default_rng(11)
    for _ in range(30):
        n_frames = rng.integers(2, 7)
        width = 3
        local = rng.normal(0, 1, (n_frames, width))
        freqs = np.zeros((n_frames, width))
        freqs[:, 1:] = rng.uniform(75, 600, (n_frames, width - 1))
        nstates = rng.integers(1, width + 1, n_frames)
        got = _kernels.viterbi_path(local, freqs, nstates, 0.35, 0.14)
        want_cost, want = brute_force_path(local, freqs, nstates, 0.35, 0.14)
        got_cost = sum(local[f, j] for f, j in enumerate(got))
        for f in range(1, n_frames):
            f1, f2 = freqs[f - 1, got[f - 1]], freqs[f, got[f]]
            if f1 > 0 and f2 > 0:
                got_cost -= 0.35 * abs(np.log2(f1 / f2))
            elif (f1 > 0) != (f2 > 0):
                got_cost -= 0.14
        assert got_cost == pytest.approx(want_cost)


def test_backends_agree():
    if _kernels.extract_candidates_numba is None:
        pytest.skip("numba backend not active")
    rng = np.random.default_rng(5)
    rnorm = rng.random((40, 300))
    args = (rnorm, 36, 294, 22050.0, 75.0, 600.0, 14)
    for a, b in zip(
        _kernels.extract_candidates_numpy(*args),
        _kernels.extract_candidates_numba(*args),
    ):
        assert np.allclose(a, b)
    local = rng.normal(0, 1, (30, 6))
    freqs = np.zeros((30, 6))
    freqs[:, 1:] = rng.uniform(75, 600, (30, 5))
    nstates = rng.integers(1, 7, 30)
    assert np.array_equal(
        _kernels.viterbi_path_numpy(local, freqs, nstates, 0.35, 0.14),
        _kernels.viterbi_path_numba(local, freqs, nstates, 0.35, 0.14),
    )


def test_config_header_round_trip():
    header = PitchConfig().as_header()
    assert header["floor"] == 75.0 and header["max_candidates"] == 15
