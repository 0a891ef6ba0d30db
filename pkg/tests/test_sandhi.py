import pytest
from hypothesis import given, settings, strategies as st

from toneprobe.pinyin import Syllable, parse_pinyin
from toneprobe.sandhi import (
    BracketError,
    EnumerationLimitError,
    Leaf,
    Word,
    apply_sandhi,
    count_sandhi_errors,
    enumerate_surface_forms,
    format_tree,
    leaves,
    oracle_from_json_line,
    oracle_to_json_line,
    parse_bracketed,
    surface_syllables,
)


def syl(tok):
    return parse_pinyin(tok)[0]


def flat(*tokens):
    return Word(tuple(Leaf(syl(t)) for t in tokens))


# --- oracle: an independent re-implementation used to cross-check ----------

def brute_forms(tones):
    """Enumerate surface forms over all binary bracketings, recursively.

    Deliberately written differently from the library (tone lists instead of
    trees; the rewrite loop is separate from the recursion).
    """

    def rewrite(ts):
        ts = list(ts)
        for i in range(len(ts) - 1):
            if ts[i] == 3 and ts[i + 1] == 3:
                ts[i] = 2
        return tuple(ts)

    def rec(ts):
        if len(ts) == 1:
            return {tuple(ts)}
        out = set()
        for k in range(1, len(ts)):
            for left in rec(ts[:k]):
                for right in rec(ts[k:]):
                    out.add(rewrite(left + right))
        return out

    return rec(tuple(tones))


# --- parsing ----------------------------------------------------------------

def test_parse_left_branching():
    tree = parse_bracketed("[[meng3 gu3] yu3]")
    assert tree == Word((Word((Leaf(syl("meng3")), Leaf(syl("gu3")))), Leaf(syl("yu3"))))


def test_parse_right_branching():
    tree = parse_bracketed("[mi3 [lao3 shu3]]")
    assert tree == Word((Leaf(syl("mi3")), Word((Leaf(syl("lao3")), Leaf(syl("shu3"))))))


def test_parse_single_leaf_wraps_in_word():
    assert parse_bracketed("ma3") == Word((Leaf(syl("ma3")),))


def test_parse_bare_list_is_flat_word():
    assert parse_bracketed("ma3 ma3 ma3") == flat("ma3", "ma3", "ma3")


@pytest.mark.parametrize("bad", ["[ma3", "ma3]", "[]", "[ma3 []]", ""])
def test_parse_errors(bad):
    with pytest.raises(BracketError):
        parse_bracketed(bad)


def test_format_tree_round_trip():
    text = "[mi3 [lao3 shu3]]"
    assert format_tree(parse_bracketed(text)) == text


# --- rule application -------------------------------------------------------

def test_right_branching_paper_example():
    assert apply_sandhi(parse_bracketed("[mi3 [lao3 shu3]]")) == (3, 2, 3)


def test_left_branching_paper_example():
    assert apply_sandhi(parse_bracketed("[[meng3 gu3] yu3]")) == (2, 2, 3)


def test_no_sandhi_identity():
    assert apply_sandhi(parse_bracketed("ma1 ma3")) == (1, 3)


def test_flat_four_third_tones():
    assert apply_sandhi(flat("ma3", "ma3", "ma3", "ma3")) == (2, 2, 2, 3)


def test_non_tone3_pass_through():
    assert apply_sandhi(flat("ma1", "ma2", "ma4", "ma0")) == (1, 2, 4, 0)


def test_surface_syllables_preserve_segments():
    out = surface_syllables(parse_bracketed("[[meng3 gu3] yu3]"))
    assert [s.initial + s.final for s in out] == ["meng", "gu", "yu"]
    assert [s.tone for s in out] == [2, 2, 3]


def test_idempotence_on_own_output():
    tree = parse_bracketed("[[meng3 gu3] yu3]")
    out = apply_sandhi(tree)
    resurfaced = Word(tuple(Leaf(s) for s in surface_syllables(tree)))
    assert apply_sandhi(resurfaced) == out


@given(st.lists(st.integers(min_value=1, max_value=4), min_size=1, max_size=7))
def test_flat_word_no_residual_33(tones):
    tree = flat(*[f"ma{t}" for t in tones])
    out = apply_sandhi(tree)
    assert all(not (a == 3 and b == 3) for a, b in zip(out, out[1:]))
    # a final tone 3 of any 3..3 run survives
    for i, t in enumerate(tones):
        if t != 3:
            assert out[i] == t


# --- enumeration ------------------------------------------------------------

def test_enumerate_three_third_tones():
    forms = enumerate_surface_forms(parse_pinyin("ma3 ma3 ma3"))
    assert set(forms) == {(2, 2, 3), (3, 2, 3)}


def test_enumerate_bisyllabic():
    assert enumerate_surface_forms(parse_pinyin("ma3 ma3")) == ((2, 3),)


def test_enumerate_no_tone3():
    assert enumerate_surface_forms(parse_pinyin("ma1 ma4")) == ((1, 4),)


def test_enumerate_with_structure_is_singleton():
    tree = parse_bracketed("[mi3 [lao3 shu3]]")
    forms = enumerate_surface_forms(parse_pinyin("mi3 lao3 shu3"), structure=tree)
    assert forms == ((3, 2, 3),)


def test_enumerate_structure_leaf_mismatch():
    tree = parse_bracketed("[ma3 ma3]")
    with pytest.raises(ValueError):
        enumerate_surface_forms(parse_pinyin("mo3 mo3"), structure=tree)


def test_enumeration_cap():
    seq = parse_pinyin(" ".join(["ma3"] * 13))
    with pytest.raises(EnumerationLimitError):
        enumerate_surface_forms(seq)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=4), min_size=1, max_size=6))
def test_enumeration_matches_brute_force(tones):
    seq = [Syllable("m", "a", t) for t in tones]
    got = set(enumerate_surface_forms(seq))
    assert got == brute_forms(tones)


# --- error metric -----------------------------------------------------------

def test_count_errors_member_is_zero():
    oracle = ((2, 2, 3), (3, 2, 3))
    assert count_sandhi_errors((2, 2, 3), oracle) == 0


def test_count_errors_min_over_forms():
    oracle = ((2, 2, 3), (3, 2, 3))
    assert count_sandhi_errors((3, 3, 3), oracle) == 1


def test_count_errors_exact_match():
    assert count_sandhi_errors((2, 3), ((2, 3),)) == 0


def test_count_errors_length_mismatch():
    with pytest.raises(ValueError):
        count_sandhi_errors((2, 3), ((2, 3, 3),))


@given(st.lists(st.integers(min_value=1, max_value=4), min_size=1, max_size=6))
def test_zero_errors_iff_member(tones):
    seq = [Syllable("m", "a", t) for t in tones]
    oracle = enumerate_surface_forms(seq)
    realized = tuple(tones)
    err = count_sandhi_errors(realized, oracle)
    assert (err == 0) == (realized in set(oracle))


# --- serialization ----------------------------------------------------------

def test_oracle_json_round_trip():
    forms = ((2, 2, 3), (3, 2, 3))
    line = oracle_to_json_line("s1", forms)
    sid, back = oracle_from_json_line(line)
    assert sid == "s1" and back == forms


def test_leaves_order():
    tree = parse_bracketed("[[meng3 gu3] yu3]")
    assert [s.final for s in leaves(tree)] == ["eng", "u", "yu"]
