import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from toneprobe.stats import (
    MannWhitneyResult,
    RatingRecord,
    SandhiJudgment,
    StatsError,
    bonferroni,
    load_judgments_csv,
    load_ratings_csv,
    mann_whitney_u,
    mos_report,
    sandhi_scoreboard,
    two_proportion_z,
    wilcoxon_signed_rank,
)


def ratings(system, measure, values):
    return [
        RatingRecord(f"s{i}", system, f"r{i % 5}", measure, v)
        for i, v in enumerate(values)
    ]


# --- MOS ---------------------------------------------------------------------

def test_mos_means_recover_constructed_values():
    # 25 ratings that average exactly 4.04
    values = [4] * 24 + [5]
    records = ratings("bert", "naturalness", values)
    report = mos_report(records)
    assert report.rendered("bert", "naturalness") == "4.04"


def test_mos_all_fives():
    report = mos_report(ratings("x", "prosody", [5] * 7))
    assert report.rendered("x", "prosody") == "5.00"


def test_mos_order_invariance():
    values = [1, 5, 3, 2, 4, 4, 2]
    r1 = mos_report(ratings("a", "naturalness", values))
    r2 = mos_report(ratings("a", "naturalness", list(reversed(values))))
    assert r1.means == r2.means


def test_mos_unknown_system_rejected():
    records = ratings("mystery", "prosody", [3, 3])
    with pytest.raises(StatsError, match="unknown system"):
        mos_report(records, systems=["baseline", "bert", "ground_truth"])


def test_rating_value_validated():
    with pytest.raises(StatsError):
        RatingRecord("s", "sys", "r", "naturalness", 6)


# --- Mann-Whitney -------------------------------------------------------------

def test_u_separated_samples():
    res = mann_whitney_u([1, 2], [3, 4])
    assert res.U == 0
    assert res.U + res.U_other == 4


def test_u_identical_constant_lists():
    n = 4
    res = mann_whitney_u([2.0] * n, [2.0] * n)
    assert res.U == pytest.approx(n * n / 2)
    assert res.p_two_sided == pytest.approx(1.0)


def test_u_monotone_transform_invariance():
    a = [1.0, 3.5, 2.2, 8.0]
    b = [2.5, 9.1, 0.3]
    f = lambda v: np.exp(v) + 5
    r1 = mann_whitney_u(a, b)
    r2 = mann_whitney_u([f(v) for v in a], [f(v) for v in b])
    assert r1.U == r2.U and r1.p_two_sided == pytest.approx(r2.p_two_sided)


@given(
    st.lists(st.floats(-50, 50), min_size=1, max_size=20),
    st.lists(st.floats(-50, 50), min_size=1, max_size=20),
)
def test_u_sum_law(a, b):
    res = mann_whitney_u(a, b)
    assert res.U + res.U_other == pytest.approx(len(a) * len(b))


def test_exact_against_known_value():
    # P(U <= 0 or U >= 16) for n=4,4 is 2/70
    res = mann_whitney_u([1, 2, 3, 4], [5, 6, 7, 8])
    assert res.method == "exact"
    assert res.p_two_sided == pytest.approx(2 / 70)


def test_exact_vs_normal_agree_small_tiefree():
    rng = np.random.default_rng(9)
    for _ in range(60):
        na = rng.integers(3, 7)
        nb = rng.integers(max(3, 8 - na), min(7, 12 - na) + 1)
        pooled = rng.permutation(rng.uniform(0, 1, na + nb))
        res = mann_whitney_u(pooled[:na], pooled[na:])
        assert res.p_exact is not None and res.p_normal is not None
        assert abs(res.p_exact - res.p_normal) < 0.02


# --- Wilcoxon ------------------------------------------------------------------

def test_wilcoxon_all_positive_n5():
    res = wilcoxon_signed_rank([0.5, 1.2, 0.1, 2.0, 0.7])
    assert res.w_minus == 0
    assert res.method == "exact"
    assert res.p_two_sided == pytest.approx(0.0625)


def test_wilcoxon_symmetric_pairs():
    res = wilcoxon_signed_rank([0.8, -0.8, 1.5, -1.5])
    assert res.w_plus == pytest.approx(res.w_minus)


def test_wilcoxon_single_diff():
    res = wilcoxon_signed_rank([1.0])
    assert res.w_minus == 0 and res.w_plus == 1


def test_wilcoxon_zeros_dropped_and_all_zero_error():
    res = wilcoxon_signed_rank([0.0, 0.0, 2.0])
    assert res.n_used == 1
    with pytest.raises(StatsError):
        wilcoxon_signed_rank([0.0, 0.0])


def test_wilcoxon_normal_branch():
    rng = np.random.default_rng(4)
    diffs = rng.normal(0.3, 1.0, 40)
    res = wilcoxon_signed_rank(diffs)
    assert res.method == "normal"
    assert 0.0 <= res.p_two_sided <= 1.0


# --- Bonferroni -----------------------------------------------------------------

def test_bonferroni_definition():
    assert bonferroni([0.01, 0.02], m=2) == [0.02, 0.04]


def test_bonferroni_clamp():
    assert bonferroni([0.8], m=3) == [1.0]


def test_bonferroni_empty():
    assert bonferroni([]) == []


@given(st.lists(st.floats(0, 1), max_size=12))
def test_bonferroni_monotone_and_clamped(ps):
    adj = bonferroni(ps)
    assert all(0 <= q <= 1 for q in adj)
    assert all(q >= p for p, q in zip(ps, adj))


# --- scoreboard -----------------------------------------------------------------

def judgments(system, category, error_list):
    return [
        SandhiJudgment(f"p{i}", system, "r0", category, e, max(e, 3))
        for i, e in enumerate(error_list)
    ]


def test_errors_per_phrase_constructed():
    # 100 phrases with 131 total errors -> 1.31; 0.92 likewise
    base = [2] * 31 + [1] * 69
    bert = [1] * 92 + [0] * 8
    js = judgments("baseline", "phrase", base) + judgments("bert", "phrase", bert)
    board = sandhi_scoreboard(js, "phrase")
    assert board.errors_per_phrase_per_system["baseline"] == pytest.approx(1.31)
    assert board.errors_per_phrase_per_system["bert"] == pytest.approx(0.92)


def test_accuracy_all_correct():
    board = sandhi_scoreboard(judgments("x", "bisyllabic", [0] * 10), "bisyllabic")
    assert board.accuracy_per_system["x"] == 1.0
    assert board.errors_per_phrase_per_system["x"] == 0.0


def test_mixed_categories_rejected():
    js = judgments("x", "phrase", [0]) + judgments("x", "bisyllabic", [0])
    with pytest.raises(StatsError, match="categories"):
        sandhi_scoreboard(js, "phrase")


def test_pairwise_test_present():
    js = judgments("a", "phrase", [0] * 8 + [1] * 2) + judgments(
        "b", "phrase", [0] * 2 + [1] * 8
    )
    board = sandhi_scoreboard(js, "phrase")
    assert ("a", "b") in board.pairwise_test
    res = board.pairwise_test[("a", "b")]
    assert res.z > 0 and 0 <= res.p_two_sided <= 1


def test_judgment_validation():
    with pytest.raises(StatsError):
        SandhiJudgment("s", "x", "r", "phrase", 4, 3)


def test_two_proportion_degenerate():
    res = two_proportion_z(5, 5, 5, 5)
    assert res.p_two_sided == 1.0


# --- CSV loaders -----------------------------------------------------------------

def test_csv_loaders(tmp_path):
    rpath = tmp_path / "ratings.csv"
    rpath.write_text(
        "sample_id,system,rater,measure,value\n"
        "s1,bert,r1,naturalness,4\n"
        "s1,baseline,r1,naturalness,3\n"
    )
    recs = load_ratings_csv(rpath)
    assert len(recs) == 2 and recs[0].value == 4

    jpath = tmp_path / "judg.csv"
    jpath.write_text(
        "sample_id,system,rater,category,n_errors,n_target_syllables\n"
        "p1,bert,r1,phrase,1,5\n"
    )
    js = load_judgments_csv(jpath)
    assert js[0].n_errors == 1

    bad = tmp_path / "bad.csv"
    bad.write_text("sample_id,system,rater,measure,value\ns1,bert,r1,naturalness,9\n")
    with pytest.raises(StatsError, match="bad rating row|1..5"):
        load_ratings_csv(bad)
