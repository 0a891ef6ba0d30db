"""Coarticulation stimulus generation and manifest files.

The coarticulation matrix crosses ordered target-syllable pairs with all
tone pairs and embeds each pair in a carrier phrase. The shipped default
carriers are reconstructions (the original six are unpublished) and are
user-replaceable; their boundary tones are chosen so that no carrier
syllable can trigger Tone-3 sandhi against a target.

Manifests are UTF-8 JSON lines, one stimulus per line. Tone-3 + Tone-3
target pairs are generated but flagged ``sandhi_pair`` so the coarticulation
analysis can exclude them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from toneprobe.pinyin import Syllable, format_pinyin, parse_pinyin, split_initial
from toneprobe.sandhi import Node, format_tree, parse_bracketed

DEFAULT_SYLLABLES = ("ma", "mo", "mi")
DEFAULT_TONES = (1, 2, 3, 4)


class ManifestError(ValueError):
    """Malformed manifest or carrier file."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class CarrierPhrase:
    id: str
    prefix: tuple[Syllable, ...]
    suffix: tuple[Syllable, ...]

    def __post_init__(self):
        if not self.prefix and not self.suffix:
            raise ManifestError(f"carrier {self.id!r} has empty prefix and suffix")


@dataclass(frozen=True)
class Stimulus:
    """One carrier-embedded target pair."""

    id: str
    carrier_id: str
    text: tuple[Syllable, ...]
    target_positions: tuple[int, int]
    underlying_tones: tuple[int, int]
    structure: Node | None = None
    sandhi_pair: bool = False

    def __post_init__(self):
        i, j = self.target_positions
        if j != i + 1 or not (0 <= i and j < len(self.text)):
            raise ManifestError(
                f"stimulus {self.id!r}: target positions {self.target_positions} invalid"
            )


@dataclass(frozen=True)
class SandhiStimulus:
    """One item from a Tone-3 sandhi stimulus list."""

    id: str
    category: str  # bisyllabic | trisyllabic | phrase
    text: tuple[Syllable, ...]
    structure: Node | None = None


def generate_coarticulation_stimuli(
    syllables=DEFAULT_SYLLABLES,
    tones=DEFAULT_TONES,
    carriers: list[CarrierPhrase] | None = None,
    allow_same_syllable: bool = False,
) -> list[Stimulus]:
    """Cartesian product of target-syllable pairs x tone pairs x carriers.

    Syllable pairs are ordered and, by default, distinct; with the default
    three syllables, four tones and six carriers this yields
    6 * 16 * 6 = 576 stimuli.
    """
    syllables = [str(s) for s in syllables]
    tones = [int(t) for t in tones]
    if carriers is None:
        carriers = default_carriers()
    if len(syllables) < 2:
        raise ValueError("need at least two target syllables")
    if not tones or not carriers:
        raise ValueError("need at least one tone and one carrier")
    if any(t not in (0, 1, 2, 3, 4) for t in tones):
        raise ValueError("tones must be in 0..4")

    split = {s: split_initial(s) for s in syllables}
    out: list[Stimulus] = []
    for carrier in carriers:
        for s1 in syllables:
            for s2 in syllables:
                if s1 == s2 and not allow_same_syllable:
                    continue
                for t1 in tones:
                    for t2 in tones:
                        i1, f1 = split[s1]
                        i2, f2 = split[s2]
                        pos = len(carrier.prefix)
                        text = (
                            carrier.prefix
                            + (Syllable(i1, f1, t1), Syllable(i2, f2, t2))
                            + carrier.suffix
                        )
                        out.append(
                            Stimulus(
                                id=f"{carrier.id}_{s1}{t1}_{s2}{t2}",
                                carrier_id=carrier.id,
                                text=text,
                                target_positions=(pos, pos + 1),
                                underlying_tones=(t1, t2),
                                sandhi_pair=(t1 == 3 and t2 == 3),
                            )
                        )
    return out


def stimulus_to_dict(stim: Stimulus) -> dict:
    return {
        "id": stim.id,
        "carrier_id": stim.carrier_id,
        "text": format_pinyin(list(stim.text)),
        "target_positions": list(stim.target_positions),
        "underlying_tones": list(stim.underlying_tones),
        "structure": None if stim.structure is None else format_tree(stim.structure),
        "sandhi_pair": stim.sandhi_pair,
    }


def stimulus_from_dict(obj: dict, line: int | None = None) -> Stimulus:
    try:
        structure = obj.get("structure")
        return Stimulus(
            id=str(obj["id"]),
            carrier_id=str(obj.get("carrier_id", "")),
            text=tuple(parse_pinyin(obj["text"])),
            target_positions=tuple(int(p) for p in obj["target_positions"]),
            underlying_tones=tuple(int(t) for t in obj["underlying_tones"]),
            structure=None if structure is None else parse_bracketed(structure),
            sandhi_pair=bool(obj.get("sandhi_pair", False)),
        )
    except KeyError as exc:
        raise ManifestError(f"missing field {exc.args[0]!r}", line) from exc


def write_stimulus_manifest(stimuli: list[Stimulus], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for stim in stimuli:
            fh.write(json.dumps(stimulus_to_dict(stim), ensure_ascii=False))
            fh.write("\n")


def load_stimulus_manifest(path) -> list[Stimulus]:
    out: list[Stimulus] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"invalid JSON: {exc.msg}", lineno) from exc
            out.append(stimulus_from_dict(obj, lineno))
    return out


def load_carriers(path) -> list[CarrierPhrase]:
    """Read a carrier file: a JSON list of {id, prefix, suffix}."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ManifestError("carrier file must hold a JSON list")
    carriers = []
    for obj in data:
        prefix = tuple(parse_pinyin(obj["prefix"])) if obj.get("prefix") else ()
        suffix = tuple(parse_pinyin(obj["suffix"])) if obj.get("suffix") else ()
        carriers.append(CarrierPhrase(str(obj["id"]), prefix, suffix))
    return carriers


def write_carriers(carriers: list[CarrierPhrase], path) -> None:
    data = [
        {
            "id": c.id,
            "prefix": format_pinyin(list(c.prefix)) if c.prefix else "",
            "suffix": format_pinyin(list(c.suffix)) if c.suffix else "",
        }
        for c in carriers
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def default_carriers() -> list[CarrierPhrase]:
    with resources.files("toneprobe.data").joinpath("carriers.json").open(
        "r", encoding="utf-8"
    ) as fh:
        data = json.load(fh)
    return [
        CarrierPhrase(
            str(obj["id"]),
            tuple(parse_pinyin(obj["prefix"])) if obj.get("prefix") else (),
            tuple(parse_pinyin(obj["suffix"])) if obj.get("suffix") else (),
        )
        for obj in data
    ]


def _parse_sandhi_lines(fh) -> list[SandhiStimulus]:
    out: list[SandhiStimulus] = []
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            structure = obj.get("structure")
            out.append(
                SandhiStimulus(
                    id=str(obj["id"]),
                    category=str(obj["category"]),
                    text=tuple(parse_pinyin(obj["text"])),
                    structure=None if structure is None else parse_bracketed(structure),
                )
            )
        except json.JSONDecodeError as exc:
            raise ManifestError(f"invalid JSON: {exc.msg}", lineno) from exc
        except KeyError as exc:
            raise ManifestError(f"missing field {exc.args[0]!r}", lineno) from exc
    return out


def load_sandhi_stimuli(path) -> list[SandhiStimulus]:
    """Read a sandhi stimulus list: JSON lines {id, category, text[, structure]}."""
    with open(path, encoding="utf-8") as fh:
        return _parse_sandhi_lines(fh)


def default_sandhi_stimuli() -> list[SandhiStimulus]:
    """The reconstructed bisyllabic/trisyllabic/phrase list shipped as data."""
    path = resources.files("toneprobe.data").joinpath("sandhi_stimuli.jsonl")
    with path.open("r", encoding="utf-8") as fh:
        return _parse_sandhi_lines(fh)
