"""Command-line entry point: one executable, one subcommand per workflow.

Exit codes: 0 success, 1 usage/validation error, 2 I/O error. All outputs
are machine-readable (JSON lines / CSV / TSV) first; human-readable
summaries go to stdout or summary.txt files.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from toneprobe import pipeline
from toneprobe.pinyin import format_pinyin, parse_pinyin
from toneprobe.pitch import PitchConfig
from toneprobe.sandhi import (
    apply_sandhi,
    enumerate_surface_forms,
    leaves,
    parse_bracketed,
)
from toneprobe.simsynth import CoartConfig
from toneprobe.speech_io import read_attention
from toneprobe.stats import (
    bonferroni,
    load_judgments_csv,
    load_ratings_csv,
    mann_whitney_u,
    mos_report,
    sandhi_scoreboard,
    wilcoxon_signed_rank,
)
from toneprobe.stimuli import (
    default_carriers,
    default_sandhi_stimuli,
    generate_coarticulation_stimuli,
    load_carriers,
    load_sandhi_stimuli,
    stimulus_to_dict,
    write_stimulus_manifest,
)

log = logging.getLogger("toneprobe")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def load_config_file(path) -> dict[str, str]:
    """Minimal key = value config format; '#' starts a comment."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def apply_config(args: argparse.Namespace, parser, subparser, config: dict[str, str]):
    """Config overrides parser defaults; explicit flags override config."""
    for key, raw in config.items():
        if not hasattr(args, key):
            continue
        default = subparser.get_default(key)
        if default is None and parser.get_default(key) is not None:
            default = parser.get_default(key)
        if getattr(args, key) != default:
            continue  # explicitly set on the command line
        current = getattr(args, key)
        if isinstance(current, bool) or isinstance(default, bool):
            value = raw.lower() in ("1", "true", "yes", "on")
        elif isinstance(default, int) and not isinstance(default, bool):
            value = int(raw)
        elif isinstance(default, float):
            value = float(raw)
        else:
            value = raw
        setattr(args, key, value)


def _carriers_from(args):
    return load_carriers(args.carriers) if args.carriers else default_carriers()


def cmd_gen_stimuli(args) -> int:
    syllables = [s for s in args.syllables.split(",") if s]
    tones = [int(t) for t in args.tones.split(",") if t]
    stimuli = generate_coarticulation_stimuli(
        syllables=syllables,
        tones=tones,
        carriers=_carriers_from(args),
        allow_same_syllable=args.allow_same_syllable,
    )
    if args.out:
        write_stimulus_manifest(stimuli, args.out)
        log.info("wrote %d stimuli to %s", len(stimuli), args.out)
    else:
        import json

        for stim in stimuli:
            print(json.dumps(stimulus_to_dict(stim), ensure_ascii=False))
    return 0


def cmd_sandhi(args) -> int:
    tree = parse_bracketed(args.text)
    seq = leaves(tree)
    if args.enumerate:
        # ignore single-flat-word wrapping: enumerate over bracketings
        forms = enumerate_surface_forms(seq, None if "[" not in args.text else tree,
                                        cap=args.cap)
        for form in forms:
            print(format_pinyin([s.with_tone(t) for s, t in zip(seq, form)]))
    else:
        tones = apply_sandhi(tree)
        print(format_pinyin([s.with_tone(t) for s, t in zip(seq, tones)]))
    return 0


def cmd_align(args) -> int:
    if args.manifest:
        if not (args.att_dir and args.out_dir):
            raise ValueError("batch mode needs --att-dir and --out-dir")
        stimuli = pipeline.load_manifest_or_fail(args.manifest)
        done = pipeline.align_batch(stimuli, args.att_dir, args.out_dir)
        log.info("aligned %d stimuli", len(done))
        return 0
    if not (args.attention and args.symbols and args.out):
        raise ValueError("need --attention, --symbols and --out (or --manifest)")
    att = read_attention(args.attention)
    from toneprobe.align import greedy_alignment
    from toneprobe.speech_io import write_textgrid

    grid = greedy_alignment(att, args.symbols.split())
    write_textgrid(grid, args.out)
    return 0


def _pitch_config(args) -> PitchConfig:
    return PitchConfig(
        time_step=args.step, floor=args.floor, ceiling=args.ceiling
    )


def cmd_pitch(args) -> int:
    cfg = _pitch_config(args)
    if args.in_dir:
        if not args.out_dir:
            raise ValueError("batch mode needs --out-dir")
        wavs = sorted(Path(args.in_dir).glob("*.wav"))
        if not wavs:
            raise ValueError(f"no .wav files in {args.in_dir}")
        done = pipeline.pitch_batch(wavs, args.out_dir, cfg, jobs=args.jobs)
        log.info("tracked %d files", len(done))
        return 0
    if not (getattr(args, "in") and args.out):
        raise ValueError("need --in and --out (or --in-dir/--out-dir)")
    pipeline.pitch_file(getattr(args, "in"), args.out, cfg)
    return 0


def cmd_simsynth(args) -> int:
    stimuli = pipeline.load_manifest_or_fail(args.manifest)
    settings = pipeline.RenderSettings(
        coart=CoartConfig(
            kappa=args.kappa, carry_decay_frac=args.decay, delta_st=args.delta
        ),
        syllable_dur=args.syllable_dur,
        base_hz=args.base,
        frame_step=args.frame_step,
        att_hop=args.hop,
        sample_rate=args.sr,
    )
    done = pipeline.simsynth_batch(stimuli, args.out_dir, settings, jobs=args.jobs)
    log.info("rendered %d stimuli to %s", len(done), args.out_dir)
    return 0


def cmd_analyze_coart(args) -> int:
    stimuli = pipeline.load_manifest_or_fail(args.manifest)
    analysis = pipeline.analyze_coarticulation(
        stimuli,
        args.f0_dir,
        args.grid_dir,
        n_points=args.n_points,
        span=args.span,
        degree=args.degree,
        edge_guard=args.guard,
        threshold_st=args.threshold,
        with_curves=not args.no_curves,
    )
    paths = pipeline.write_coart_reports(analysis, args.out_dir)
    print(Path(paths["summary"]).read_text(), end="")
    return 0


def cmd_score_sandhi(args) -> int:
    import csv as _csv

    if args.judgments:
        judgments = load_judgments_csv(args.judgments)
        board = sandhi_scoreboard(judgments, args.category)
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "scoreboard.csv", "w", newline="", encoding="utf-8") as fh:
            w = _csv.writer(fh)
            w.writerow(["system", "n", "accuracy", "errors_per_phrase"])
            for system in sorted(board.accuracy_per_system):
                w.writerow([
                    system,
                    board.n_per_system[system],
                    f"{board.accuracy_per_system[system]:.4f}",
                    f"{board.errors_per_phrase_per_system[system]:.2f}",
                ])
        for system in sorted(board.accuracy_per_system):
            print(
                f"{args.category} {system}: accuracy "
                f"{board.accuracy_per_system[system]:.4f}, errors/phrase "
                f"{board.errors_per_phrase_per_system[system]:.2f}"
            )
        for (s1, s2), res in board.pairwise_test.items():
            print(f"{s1} vs {s2}: z = {res.z:.3f}, p = {res.p_two_sided:.4f}")
        return 0

    if not args.realized:
        raise ValueError("need --judgments or --realized")
    realized = pipeline.load_realized_file(args.realized)
    if args.oracle:
        oracles = pipeline.load_oracle_file(args.oracle)
    elif args.stimuli:
        items = load_sandhi_stimuli(args.stimuli)
        oracles = {s.id: pipeline.oracle_for_stimulus(s, cap=args.cap) for s in items}
    else:
        raise ValueError("need --oracle or --stimuli with --realized")
    score = pipeline.score_realizations(realized, oracles)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "machine_scores.csv", "w", newline="", encoding="utf-8") as fh:
        w = _csv.writer(fh)
        w.writerow(["id", "n_errors"])
        for sid in sorted(score.per_item):
            w.writerow([sid, score.per_item[sid]])
    print(f"items: {len(score.per_item)}")
    print(f"accuracy: {score.accuracy:.4f}")
    print(f"mean errors per item: {score.mean_errors:.2f}")
    return 0


def cmd_mos_report(args) -> int:
    import csv as _csv

    records = load_ratings_csv(args.ratings)
    report = mos_report(records)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "mos_means.csv", "w", newline="", encoding="utf-8") as fh:
        w = _csv.writer(fh)
        w.writerow(["system", "measure", "mean", "n"])
        for system, measure, mean, n in report.as_rows():
            w.writerow([system, measure, mean, n])
    print("system\tmeasure\tmean\tn")
    for system, measure, mean, n in report.as_rows():
        print(f"{system}\t{measure}\t{mean}\t{n}")

    # pairwise comparisons per measure, Bonferroni-corrected together
    by_key: dict[tuple[str, str, str], dict] = {}
    for r in records:
        by_key.setdefault((r.system, r.measure), {})[(r.sample_id, r.rater)] = r.value
    systems = sorted({r.system for r in records})
    measures = sorted({r.measure for r in records})
    comparisons = []
    for measure in measures:
        for i, s1 in enumerate(systems):
            for s2 in systems[i + 1:]:
                v1 = by_key.get((s1, measure), {})
                v2 = by_key.get((s2, measure), {})
                common = sorted(set(v1) & set(v2))
                if args.test == "signed-rank" and common:
                    diffs = [v1[k] - v2[k] for k in common]
                    if all(d == 0 for d in diffs):
                        comparisons.append((measure, s1, s2, "signed-rank", 1.0))
                        continue
                    res = wilcoxon_signed_rank(diffs)
                    comparisons.append((measure, s1, s2, "signed-rank", res.p_two_sided))
                elif v1 and v2:
                    res = mann_whitney_u(list(v1.values()), list(v2.values()))
                    comparisons.append((measure, s1, s2, "mann-whitney", res.p_two_sided))
    adjusted = bonferroni([c[4] for c in comparisons])
    with open(out_dir / "mos_tests.csv", "w", newline="", encoding="utf-8") as fh:
        w = _csv.writer(fh)
        w.writerow(["measure", "system_a", "system_b", "test", "p", "p_bonferroni"])
        for (measure, s1, s2, test, p), padj in zip(comparisons, adjusted):
            w.writerow([measure, s1, s2, test, f"{p:.6g}", f"{padj:.6g}"])
            log.info("%s %s vs %s: %s p=%.4g (adj %.4g)", measure, s1, s2, test, p, padj)
    return 0


def build_parser() -> tuple[_Parser, dict]:
    parser = _Parser(prog="toneprobe", description=__doc__)
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--jobs", type=int, default=1, help="parallel workers")
    parser.add_argument("--log-level", default="warning",
                        choices=["debug", "info", "warning", "error"])
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers = {}

    p = sub.add_parser("gen-stimuli", help="generate the coarticulation stimulus matrix")
    p.add_argument("--syllables", default="ma,mo,mi")
    p.add_argument("--tones", default="1,2,3,4")
    p.add_argument("--carriers", help="carrier JSON file (default: built-in six)")
    p.add_argument("--allow-same-syllable", action="store_true")
    p.add_argument("--defaults", action="store_true",
                   help="explicit marker for the built-in configuration")
    p.add_argument("--out", help="manifest path (default: JSON lines on stdout)")
    p.set_defaults(func=cmd_gen_stimuli)
    subparsers["gen-stimuli"] = p

    p = sub.add_parser("sandhi", help="apply or enumerate Tone-3 sandhi")
    p.add_argument("text", help="tone-digit Pinyin, optionally bracketed")
    p.add_argument("--enumerate", action="store_true",
                   help="print every licit surface form")
    p.add_argument("--cap", type=int, default=12, help="enumeration length cap")
    p.set_defaults(func=cmd_sandhi)
    subparsers["sandhi"] = p

    p = sub.add_parser("align", help="attention matrix -> TextGrid")
    p.add_argument("--attention")
    p.add_argument("--symbols", help="whitespace-separated labels")
    p.add_argument("--out")
    p.add_argument("--manifest", help="batch mode over a stimulus manifest")
    p.add_argument("--att-dir")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_align)
    subparsers["align"] = p

    p = sub.add_parser("pitch", help="autocorrelation f0 tracking")
    p.add_argument("--in", dest="in")
    p.add_argument("--out")
    p.add_argument("--in-dir")
    p.add_argument("--out-dir")
    p.add_argument("--floor", type=float, default=75.0)
    p.add_argument("--ceiling", type=float, default=600.0)
    p.add_argument("--step", type=float, default=0.01)
    p.set_defaults(func=cmd_pitch)
    subparsers["pitch"] = p

    p = sub.add_parser("simsynth", help="render stimuli with the contour simulator")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--kappa", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--decay", type=float, default=0.6)
    p.add_argument("--syllable-dur", type=float, default=0.25)
    p.add_argument("--base", type=float, default=220.0)
    p.add_argument("--frame-step", type=float, default=0.01)
    p.add_argument("--hop", type=float, default=pipeline.DEFAULT_ATT_HOP_S,
                   help="attention frame hop in seconds")
    p.add_argument("--sr", type=int, default=22050)
    p.add_argument("--seed", type=int, default=0,
                   help="reserved; the simulator is deterministic")
    p.set_defaults(func=cmd_simsynth)
    subparsers["simsynth"] = p

    p = sub.add_parser("analyze-coart", help="coarticulation analysis over a rendered set")
    p.add_argument("--manifest", required=True)
    p.add_argument("--f0-dir", required=True)
    p.add_argument("--grid-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-points", type=int, default=30)
    p.add_argument("--span", type=float, default=0.75)
    p.add_argument("--degree", type=int, default=2, choices=(1, 2))
    p.add_argument("--guard", type=float, default=pipeline.DEFAULT_EDGE_GUARD_S,
                   help="seconds trimmed from both syllable edges")
    p.add_argument("--threshold", type=float, default=0.0,
                   help="High/Low split in st re the utterance median")
    p.add_argument("--no-curves", action="store_true")
    p.set_defaults(func=cmd_analyze_coart)
    subparsers["analyze-coart"] = p

    p = sub.add_parser("score-sandhi", help="score sandhi realizations or judgments")
    p.add_argument("--judgments", help="listener judgment CSV")
    p.add_argument("--category", default="phrase",
                   choices=("bisyllabic", "trisyllabic", "phrase"))
    p.add_argument("--realized", help="JSON lines {id, tones} of realized forms")
    p.add_argument("--oracle", help="JSON lines {id, forms} oracle sets")
    p.add_argument("--stimuli", help="sandhi stimulus list to derive oracles from")
    p.add_argument("--cap", type=int, default=12)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_score_sandhi)
    subparsers["score-sandhi"] = p

    p = sub.add_parser("mos-report", help="MOS means and pairwise tests")
    p.add_argument("--ratings", required=True)
    p.add_argument("--test", default="signed-rank",
                   choices=("signed-rank", "mann-whitney"))
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_mos_report)
    subparsers["mos-report"] = p

    return parser, subparsers


def main(argv=None) -> int:
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper()),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.config:
        try:
            config = load_config_file(args.config)
        except OSError as exc:
            print(f"toneprobe: error: cannot read config: {exc}", file=sys.stderr)
            return 2
        apply_config(args, parser, subparsers[args.command], config)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        # a missing input path is a usage error, not an I/O failure
        print(f"toneprobe: error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError) as exc:
        print(f"toneprobe: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"toneprobe: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
