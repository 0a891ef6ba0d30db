"""Hot numeric kernels for pitch tracking, in numba and pure-numpy twins.

The two implementations are kept in lockstep and cross-checked in the test
suite; ``TONEPROBE_NUMBA=0`` selects the numpy path at import time.
"""

from __future__ import annotations

import numpy as np

from toneprobe._accel import USE_NUMBA

if USE_NUMBA:
    from numba import njit


# --------------------------------------------------------------------------
# Candidate extraction: local maxima of the normalized autocorrelation with
# parabolic interpolation, strongest first.

def extract_candidates_numpy(rnorm, lmin, lmax, sr, floor, ceiling, max_voiced):
    """Per frame, top pitch candidates (freq Hz, strength) from lag peaks.

    Returns (freqs, strengths, counts) with shape (F, max_voiced); unused
    slots hold zeros.
    """
    n_frames = rnorm.shape[0]
    mid = rnorm[:, lmin:lmax + 1]
    left = rnorm[:, lmin - 1:lmax]
    right = rnorm[:, lmin + 1:lmax + 2]
    is_peak = (mid > left) & (mid >= right) & (mid > 0.0)

    denom = 2.0 * mid - left - right
    safe = denom > 1e-30
    delta = np.where(safe, 0.5 * (right - left) / np.where(safe, denom, 1.0), 0.0)
    delta = np.clip(delta, -0.5, 0.5)
    lag = np.arange(lmin, lmax + 1)[None, :] + delta
    strength = np.minimum(mid + 0.25 * (right - left) * delta, 1.0)
    freq = sr / lag
    valid = is_peak & (freq >= floor) & (freq <= ceiling)

    score = np.where(valid, strength, -np.inf)
    order = np.argsort(-score, axis=1, kind="stable")[:, :max_voiced]
    top_valid = np.take_along_axis(valid, order, axis=1)
    freqs = np.where(top_valid, np.take_along_axis(freq, order, axis=1), 0.0)
    strengths = np.where(top_valid, np.take_along_axis(strength, order, axis=1), 0.0)
    counts = top_valid.sum(axis=1).astype(np.int64)
    # compact each row so valid candidates are contiguous from slot 0
    for f in np.flatnonzero(counts < max_voiced):
        k = counts[f]
        keep = top_valid[f]
        freqs[f, :k] = freqs[f, keep]
        freqs[f, k:] = 0.0
        strengths[f, :k] = strengths[f, keep]
        strengths[f, k:] = 0.0
    return freqs, strengths, counts


def _extract_candidates_loop(rnorm, lmin, lmax, sr, floor, ceiling, max_voiced):
    n_frames = rnorm.shape[0]
    freqs = np.zeros((n_frames, max_voiced))
    strengths = np.zeros((n_frames, max_voiced))
    counts = np.zeros(n_frames, dtype=np.int64)
    for f in range(n_frames):
        row = rnorm[f]
        n = 0
        cf = np.empty(lmax - lmin + 1)
        cs = np.empty(lmax - lmin + 1)
        for i in range(lmin, lmax + 1):
            r0 = row[i]
            rm = row[i - 1]
            rp = row[i + 1]
            if r0 <= 0.0 or r0 <= rm or r0 < rp:
                continue
            denom = 2.0 * r0 - rm - rp
            if denom > 1e-30:
                delta = 0.5 * (rp - rm) / denom
                if delta > 0.5:
                    delta = 0.5
                elif delta < -0.5:
                    delta = -0.5
            else:
                delta = 0.0
            lag = i + delta
            strength = r0 + 0.25 * (rp - rm) * delta
            if strength > 1.0:
                strength = 1.0
            freq = sr / lag
            if freq < floor or freq > ceiling:
                continue
            cf[n] = freq
            cs[n] = strength
            n += 1
        # selection of the top max_voiced candidates by strength
        k = min(n, max_voiced)
        for j in range(k):
            best = j
            for m in range(j + 1, n):
                if cs[m] > cs[best]:
                    best = m
            cs[j], cs[best] = cs[best], cs[j]
            cf[j], cf[best] = cf[best], cf[j]
            freqs[f, j] = cf[j]
            strengths[f, j] = cs[j]
        counts[f] = k
    return freqs, strengths, counts


# --------------------------------------------------------------------------
# Viterbi path through per-frame candidates. State 0 is the unvoiced
# candidate (frequency 0); transition costs follow the classic
# autocorrelation tracker: octave-jump cost between voiced states and a
# flat cost for voicing changes.

def viterbi_path_numpy(local, freqs, nstates, octave_jump_cost, vuv_cost):
    n_frames, width = local.shape
    path = np.zeros(n_frames, dtype=np.int64)
    back = np.zeros((n_frames, width), dtype=np.int64)
    total = np.full(width, -np.inf)
    n0 = nstates[0]
    total[:n0] = local[0, :n0]
    for f in range(1, n_frames):
        np_prev = nstates[f - 1]
        np_cur = nstates[f]
        fp = freqs[f - 1, :np_prev]
        fc = freqs[f, :np_cur]
        pv = fp > 0.0
        cv = fc > 0.0
        both = pv[:, None] & cv[None, :]
        ratio = np.ones((np_prev, np_cur))
        np.divide(fp[:, None], fc[None, :], out=ratio, where=both)
        trans = np.where(
            both,
            octave_jump_cost * np.abs(np.log2(np.where(both, ratio, 1.0))),
            np.where(pv[:, None] == cv[None, :], 0.0, vuv_cost),
        )
        cand = total[:np_prev, None] - trans
        best = np.argmax(cand, axis=0)
        new_total = np.full(width, -np.inf)
        new_total[:np_cur] = cand[best, np.arange(np_cur)] + local[f, :np_cur]
        back[f, :np_cur] = best
        total = new_total
    j = int(np.argmax(total[: nstates[-1]]))
    for f in range(n_frames - 1, -1, -1):
        path[f] = j
        j = int(back[f, j])
    return path


def _viterbi_loop(local, freqs, nstates, octave_jump_cost, vuv_cost):
    n_frames, width = local.shape
    path = np.zeros(n_frames, dtype=np.int64)
    back = np.zeros((n_frames, width), dtype=np.int64)
    total = np.full(width, -np.inf)
    for j in range(nstates[0]):
        total[j] = local[0, j]
    for f in range(1, n_frames):
        new_total = np.full(width, -np.inf)
        for j in range(nstates[f]):
            fc = freqs[f, j]
            best_val = -np.inf
            best_i = 0
            for i in range(nstates[f - 1]):
                fp = freqs[f - 1, i]
                if fp > 0.0 and fc > 0.0:
                    cost = octave_jump_cost * abs(np.log2(fp / fc))
                elif fp == 0.0 and fc == 0.0:
                    cost = 0.0
                else:
                    cost = vuv_cost
                val = total[i] - cost
                if val > best_val:
                    best_val = val
                    best_i = i
            new_total[j] = best_val + local[f, j]
            back[f, j] = best_i
        total = new_total
    best_j = 0
    best_val = -np.inf
    for j in range(nstates[n_frames - 1]):
        if total[j] > best_val:
            best_val = total[j]
            best_j = j
    j = best_j
    for f in range(n_frames - 1, -1, -1):
        path[f] = j
        j = back[f, j]
    return path


if USE_NUMBA:
    extract_candidates_numba = njit(cache=True)(_extract_candidates_loop)
    viterbi_path_numba = njit(cache=True)(_viterbi_loop)
    extract_candidates = extract_candidates_numba
    viterbi_path = viterbi_path_numba
else:
    extract_candidates_numba = None
    viterbi_path_numba = None
    extract_candidates = extract_candidates_numpy
    viterbi_path = viterbi_path_numpy
