"""Batch workflows: render, track, align, analyze, score.

These drivers wire the core modules into the experiment's end-to-end flow
(stimulus manifest -> simulated audio/attention -> pitch tracks -> aligned
TextGrids -> coarticulation report and sandhi scores). The CLI is a thin
wrapper around this module; everything here is importable for tests.

Normalization reference: features are measured in semitones re the median
f0 of the stimulus frames *outside* the target pair. With targets included
the reference would swing with the target tones themselves (up to a few
semitones for extreme pairs), which both destabilizes classification and
leaks the manipulated tones into the normalizer; carrier frames are the
constant reference the carrier-phrase design provides.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from toneprobe.align import greedy_alignment
from toneprobe.contour import (
    CoartRecord,
    CoartSummary,
    ONSET_CLASS,
    OFFSET_CLASS,
    classify_tone,
    coarticulation_summary,
    normalize_contour,
    ContourError,
)
from toneprobe.pinyin import Syllable, format_syllable
from toneprobe.pitch import PitchConfig, f0_for_interval, track_f0
from toneprobe.sandhi import (
    Leaf,
    Word,
    apply_sandhi,
    count_sandhi_errors,
    enumerate_surface_forms,
    oracle_from_json_line,
    oracle_to_json_line,
)
from toneprobe.simsynth import (
    CoartConfig,
    ToneTemplates,
    synth_attention,
    synth_audio,
    synth_contour,
)
from toneprobe.speech_io import (
    read_attention,
    read_f0,
    read_textgrid,
    read_wav,
    write_attention,
    write_f0,
    write_textgrid,
    write_wav,
)
from toneprobe.stimuli import SandhiStimulus, Stimulus, load_stimulus_manifest

log = logging.getLogger("toneprobe")

DEFAULT_EDGE_GUARD_S = 0.02
DEFAULT_ATT_HOP_S = 0.01


def surface_sequence(stim) -> list[Syllable]:
    """Surface syllables of a stimulus: sandhi applied over its structure,
    or over one flat word when no structure is given."""
    tree = stim.structure
    if tree is None:
        tree = Word(tuple(Leaf(s) for s in stim.text))
    tones = apply_sandhi(tree)
    return [s.with_tone(t) for s, t in zip(stim.text, tones)]


# --------------------------------------------------------------------------
# simsynth batch

@dataclass(frozen=True)
class RenderSettings:
    coart: CoartConfig = CoartConfig()
    syllable_dur: float = 0.25
    base_hz: float = 220.0
    frame_step: float = 0.01
    att_hop: float = DEFAULT_ATT_HOP_S
    sample_rate: int = 22050


def render_stimulus(
    stim, out_dir, settings: RenderSettings | None = None,
    templates: ToneTemplates | None = None,
) -> dict[str, Path]:
    """Write <id>.wav, <id>.f0.tsv, <id>.TextGrid and <id>.att.tsv."""
    settings = settings or RenderSettings()
    out_dir = Path(out_dir)
    seq = surface_sequence(stim)
    track, grid = synth_contour(
        seq,
        templates=templates,
        coart=settings.coart,
        syllable_dur=settings.syllable_dur,
        base_hz=settings.base_hz,
        frame_step=settings.frame_step,
    )
    audio = synth_audio(track, settings.sample_rate)
    att = synth_attention(grid, settings.att_hop)
    paths = {
        "wav": out_dir / f"{stim.id}.wav",
        "f0": out_dir / f"{stim.id}.f0.tsv",
        "grid": out_dir / f"{stim.id}.TextGrid",
        "att": out_dir / f"{stim.id}.att.tsv",
    }
    write_wav(audio, paths["wav"])
    write_f0(track, paths["f0"], header={"source": "simsynth", "base_hz": settings.base_hz})
    write_textgrid(grid, paths["grid"])
    write_attention(att, paths["att"])
    return paths


def _render_one(args):
    stim, out_dir, settings = args
    render_stimulus(stim, out_dir, settings)
    return stim.id


def simsynth_batch(stimuli: list, out_dir, settings: RenderSettings | None = None,
                   jobs: int = 1) -> list[str]:
    settings = settings or RenderSettings()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    work = [(stim, out_dir, settings) for stim in stimuli]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_render_one, work, chunksize=8))
    return [_render_one(w) for w in work]


# --------------------------------------------------------------------------
# pitch batch

def pitch_file(wav_path, out_path, cfg: PitchConfig | None = None) -> None:
    cfg = cfg or PitchConfig()
    audio = read_wav(wav_path)
    track = track_f0(audio, cfg)
    header = {"source": "track_f0", "sample_rate": audio.sample_rate}
    header.update(cfg.as_header())
    write_f0(track, out_path, header=header)


def _pitch_one(args):
    wav_path, out_path, cfg = args
    pitch_file(wav_path, out_path, cfg)
    return Path(wav_path).stem


def pitch_batch(wav_paths, out_dir, cfg: PitchConfig | None = None, jobs: int = 1) -> list[str]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    work = [
        (Path(p), out_dir / (Path(p).stem + ".f0.tsv"), cfg or PitchConfig())
        for p in wav_paths
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_pitch_one, work, chunksize=8))
    return [_pitch_one(w) for w in work]


# --------------------------------------------------------------------------
# align batch

def align_batch(stimuli: list, att_dir, out_dir) -> list[str]:
    att_dir, out_dir = Path(att_dir), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    done = []
    for stim in stimuli:
        att = read_attention(att_dir / f"{stim.id}.att.tsv")
        labels = [format_syllable(s) for s in surface_sequence(stim)]
        grid = greedy_alignment(att, labels)
        write_textgrid(grid, out_dir / f"{stim.id}.TextGrid")
        done.append(stim.id)
    return done


# --------------------------------------------------------------------------
# coarticulation analysis

@dataclass
class ClassificationRow:
    stimulus_id: str
    position: int
    label: str
    surface_tone: int
    predicted_tone: int
    correct: bool


@dataclass
class CoartAnalysis:
    summary: CoartSummary
    classification: list[ClassificationRow]
    n_excluded_sandhi_pairs: int
    n_skipped: int


def _stimulus_median(track, intervals, target_positions) -> float:
    """Median voiced f0 over the frames outside the target syllables."""
    exclude = np.zeros(len(track.times), dtype=bool)
    for k in target_positions:
        iv = intervals[k]
        exclude |= (track.times >= iv.xmin) & (track.times < iv.xmax)
    sel = track.voiced & ~exclude
    if not np.any(sel):
        sel = track.voiced
    if not np.any(sel):
        raise ContourError("no voiced frames in utterance")
    return float(np.median(track.f0[sel]))


def analyze_coarticulation(
    stimuli: list[Stimulus],
    f0_dir,
    grid_dir,
    n_points: int = 30,
    span: float = 0.75,
    degree: int = 2,
    edge_guard: float = DEFAULT_EDGE_GUARD_S,
    threshold_st: float = 0.0,
    with_curves: bool = True,
) -> CoartAnalysis:
    """Build per-target features from tracked f0 + TextGrids and summarize.

    Emits one carry-over record per stimulus (second target syllable,
    context = first target's canonical offset class) and one anticipatory
    record (first target, context = second target's canonical onset class),
    excluding Tone-3 + Tone-3 pairs. Classification rows cover both target
    syllables of every analyzable stimulus, sandhi pairs included.
    """
    f0_dir, grid_dir = Path(f0_dir), Path(grid_dir)
    records: list[CoartRecord] = []
    rows: list[ClassificationRow] = []
    n_excluded = 0
    n_skipped = 0
    for stim in stimuli:
        try:
            track = read_f0(f0_dir / f"{stim.id}.f0.tsv")
            grid = read_textgrid(grid_dir / f"{stim.id}.TextGrid")
            intervals = grid.tier("symbols").intervals
            i, j = stim.target_positions
            if j >= len(intervals):
                raise ContourError("target syllable missing from grid")
            med = _stimulus_median(track, intervals, (i, j))
            feats = {}
            for k in (i, j):
                iv = intervals[k]
                samples = f0_for_interval(track, iv.xmin + edge_guard, iv.xmax - edge_guard)
                feats[k] = normalize_contour(samples, med, n_points)
        except (ContourError, FileNotFoundError, KeyError) as exc:
            n_skipped += 1
            log.warning("skipping %s: %s", stim.id, exc)
            continue

        for k in (i, j):
            label = intervals[k].label
            surface = int(label[-1]) if label and label[-1].isdigit() else -1
            pred = classify_tone(feats[k], threshold_st)
            rows.append(
                ClassificationRow(stim.id, k, label, surface, pred, pred == surface)
            )

        if stim.sandhi_pair:
            n_excluded += 1
            continue
        t1, t2 = stim.underlying_tones
        records.append(
            CoartRecord(stim.id, t2, feats[j], prev_offset_class=OFFSET_CLASS[t1])
        )
        records.append(
            CoartRecord(stim.id, t1, feats[i], next_onset_class=ONSET_CLASS[t2])
        )

    summary = coarticulation_summary(
        records, span=span, degree=degree, n_grid=n_points, with_curves=with_curves
    )
    return CoartAnalysis(summary, rows, n_excluded, n_skipped)


def write_coart_reports(analysis: CoartAnalysis, out_dir) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "carryover": out_dir / "carryover.csv",
        "anticipatory": out_dir / "anticipatory.csv",
        "curves": out_dir / "loess_curves.csv",
        "classification": out_dir / "classification.csv",
        "summary": out_dir / "summary.txt",
    }
    for key, cells in (("carryover", analysis.summary.carryover),
                       ("anticipatory", analysis.summary.anticipatory)):
        with open(paths[key], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["tone", "n_high", "n_low", "mean_high", "mean_low", "effect_st"])
            for tone in sorted(cells):
                c = cells[tone]
                w.writerow([tone, c.n_high, c.n_low,
                            f"{c.mean_high:.6f}", f"{c.mean_low:.6f}", f"{c.effect:.6f}"])
    with open(paths["curves"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "tone", "context", "x", "fitted", "ci_low", "ci_high"])
        for curve in analysis.summary.curves:
            for x, f, lo, hi in zip(curve.fit.grid_x, curve.fit.fitted,
                                    curve.fit.ci_low, curve.fit.ci_high):
                w.writerow([curve.kind, curve.tone, curve.context,
                            f"{x:.6f}", f"{f:.6f}", f"{lo:.6f}", f"{hi:.6f}"])
    with open(paths["classification"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["stimulus_id", "position", "label", "surface_tone",
                    "predicted_tone", "correct"])
        for r in analysis.classification:
            w.writerow([r.stimulus_id, r.position, r.label, r.surface_tone,
                        r.predicted_tone, int(r.correct)])
    n_ok = sum(r.correct for r in analysis.classification)
    n_all = len(analysis.classification)
    with open(paths["summary"], "w", encoding="utf-8") as fh:
        if n_all:
            fh.write(f"target syllables classified: {n_ok}/{n_all} ({n_ok / n_all:.4f})\n")
        else:
            fh.write("no targets analyzed\n")
        fh.write(f"sandhi pairs excluded from coarticulation: "
                 f"{analysis.n_excluded_sandhi_pairs}\n")
        fh.write(f"stimuli skipped: {analysis.n_skipped}\n")
        for kind, cells in (("carry-over", analysis.summary.carryover),
                            ("anticipatory", analysis.summary.anticipatory)):
            for tone in sorted(cells):
                fh.write(f"{kind} effect, tone {tone}: {cells[tone].effect:+.3f} st\n")
        for warning in analysis.summary.warnings:
            fh.write(f"warning: {warning}\n")
    return paths


# --------------------------------------------------------------------------
# sandhi oracle + machine scoring

def oracle_for_stimulus(stim: SandhiStimulus, cap: int = 12):
    return enumerate_surface_forms(list(stim.text), stim.structure, cap=cap)


def write_oracle_file(stimuli: list[SandhiStimulus], path, cap: int = 12) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for stim in stimuli:
            fh.write(oracle_to_json_line(stim.id, oracle_for_stimulus(stim, cap)))
            fh.write("\n")


def load_oracle_file(path) -> dict[str, tuple]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                sid, forms = oracle_from_json_line(line)
                out[sid] = forms
    return out


def load_realized_file(path) -> dict[str, tuple]:
    """JSON lines {id, tones: [...]} of realized surface tones."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                obj = json.loads(line)
                out[str(obj["id"])] = tuple(int(t) for t in obj["tones"])
    return out


@dataclass
class MachineScore:
    per_item: dict[str, int]
    mean_errors: float
    accuracy: float  # share of items with zero errors


def score_realizations(realized: dict[str, tuple], oracles: dict[str, tuple]) -> MachineScore:
    missing = sorted(set(realized) - set(oracles))
    if missing:
        raise ValueError(f"no oracle for ids: {missing[:5]}")
    per_item = {
        sid: count_sandhi_errors(tones, oracles[sid]) for sid, tones in realized.items()
    }
    if not per_item:
        raise ValueError("no realized forms to score")
    errs = list(per_item.values())
    return MachineScore(
        per_item=per_item,
        mean_errors=float(np.mean(errs)),
        accuracy=float(np.mean([e == 0 for e in errs])),
    )


def load_manifest_or_fail(path) -> list[Stimulus]:
    stimuli = load_stimulus_manifest(path)
    if not stimuli:
        raise ValueError(f"empty manifest: {path}")
    return stimuli
