"""Listener-rating aggregation and rank statistics.

Mann-Whitney U and Wilcoxon signed-rank are both provided: published
descriptions of "paired Mann-Whitney tests" are ambiguous, so callers pick
the test that matches their pairing and the reports record which one ran.
Both use midranks for ties and switch from the normal approximation (with
tie and continuity corrections) to exact enumeration on small samples.
Group comparisons of sandhi accuracy use a two-proportion z-test.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

EXACT_LIMIT = 12  # pooled-size bound below which p-values are enumerated

VALID_MEASURES = ("naturalness", "prosody")


class StatsError(ValueError):
    pass


# --------------------------------------------------------------------------
# records

@dataclass(frozen=True)
class RatingRecord:
    sample_id: str
    system: str
    rater: str
    measure: str
    value: int

    def __post_init__(self):
        if self.value not in (1, 2, 3, 4, 5):
            raise StatsError(f"rating must be an integer 1..5, got {self.value!r}")


@dataclass(frozen=True)
class SandhiJudgment:
    sample_id: str
    system: str
    rater: str
    category: str
    n_errors: int
    n_target_syllables: int

    def __post_init__(self):
        if self.n_target_syllables < 1:
            raise StatsError("n_target_syllables must be >= 1")
        if not 0 <= self.n_errors <= self.n_target_syllables:
            raise StatsError(
                f"n_errors {self.n_errors} outside 0..{self.n_target_syllables}"
            )


def load_ratings_csv(path) -> list[RatingRecord]:
    """CSV columns: sample_id,system,rater,measure,value."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.DictReader(fh), start=2):
            try:
                out.append(
                    RatingRecord(
                        row["sample_id"], row["system"], row["rater"],
                        row["measure"], int(row["value"]),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise StatsError(f"{path}:{i}: bad rating row ({exc})") from exc
    return out


def load_judgments_csv(path) -> list[SandhiJudgment]:
    """CSV columns: sample_id,system,rater,category,n_errors,n_target_syllables."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.DictReader(fh), start=2):
            try:
                out.append(
                    SandhiJudgment(
                        row["sample_id"], row["system"], row["rater"],
                        row["category"], int(row["n_errors"]),
                        int(row["n_target_syllables"]),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise StatsError(f"{path}:{i}: bad judgment row ({exc})") from exc
    return out


# --------------------------------------------------------------------------
# MOS

@dataclass
class MosReport:
    means: dict[tuple[str, str], float]  # (system, measure) -> mean
    counts: dict[tuple[str, str], int]

    def rendered(self, system: str, measure: str) -> str:
        return f"{self.means[(system, measure)]:.2f}"

    def as_rows(self) -> list[tuple[str, str, str, int]]:
        return [
            (sys, meas, self.rendered(sys, meas), self.counts[(sys, meas)])
            for sys, meas in sorted(self.means)
        ]


def mos_report(records: list[RatingRecord], systems: list[str] | None = None) -> MosReport:
    """Arithmetic mean per system x measure; 2-decimal rendering."""
    if not records:
        raise StatsError("no rating records")
    if systems is not None:
        known = set(systems)
        for r in records:
            if r.system not in known:
                raise StatsError(f"unknown system label {r.system!r}")
    sums: dict[tuple[str, str], float] = {}
    counts: dict[tuple[str, str], int] = {}
    for r in records:
        key = (r.system, r.measure)
        sums[key] = sums.get(key, 0.0) + r.value
        counts[key] = counts.get(key, 0) + 1
    means = {k: sums[k] / counts[k] for k in sums}
    return MosReport(means, counts)


# --------------------------------------------------------------------------
# Mann-Whitney U

@dataclass
class MannWhitneyResult:
    U: float  # U statistic of the first sample
    U_other: float
    p_two_sided: float
    method: str  # "exact" | "normal"
    p_exact: float | None = None
    p_normal: float | None = None


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def mann_whitney_u(a, b) -> MannWhitneyResult:
    """Two-sided Mann-Whitney U from rank sums with midranks for ties.

    Exact enumeration over group assignments when len(a)+len(b) <= 12,
    otherwise normal approximation with tie and continuity corrections.
    """
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    if not a or not b:
        raise StatsError("both samples must be non-empty")
    na, nb = len(a), len(b)
    pooled = np.array(a + b)
    ranks = rankdata(pooled)
    u_a = float(ranks[:na].sum() - na * (na + 1) / 2)
    u_b = na * nb - u_a
    mu = na * nb / 2.0

    # normal approximation with tie and continuity corrections; on tie-free
    # data an Edgeworth kurtosis term sharpens the small-sample tail
    n = na + nb
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float((tie_counts**3 - tie_counts).sum())
    var = na * nb / 12.0 * ((n + 1) - tie_term / (n * (n - 1))) if n > 1 else 0.0
    if var <= 0:
        p_normal = 1.0
    else:
        z = max(abs(u_a - mu) - 0.5, 0.0) / math.sqrt(var)
        sf = _normal_sf(z)
        if tie_term == 0:
            k4 = -na * nb * (n + 1) * (na**2 + nb**2 + na * nb + na + nb) / 120.0
            gamma2 = k4 / var**2
            phi = math.exp(-z * z / 2.0) / math.sqrt(2.0 * math.pi)
            sf += phi * (gamma2 / 24.0) * (z**3 - 3.0 * z)
        p_normal = min(1.0, max(0.0, 2.0 * sf))

    p_exact = None
    if n <= EXACT_LIMIT:
        dev = abs(u_a - mu)
        hits = 0
        total = 0
        for combo in itertools.combinations(range(n), na):
            u = float(ranks[list(combo)].sum() - na * (na + 1) / 2)
            if abs(u - mu) >= dev - 1e-9:
                hits += 1
            total += 1
        p_exact = hits / total

    if p_exact is not None:
        return MannWhitneyResult(u_a, u_b, p_exact, "exact", p_exact, p_normal)
    return MannWhitneyResult(u_a, u_b, p_normal, "normal", None, p_normal)


# --------------------------------------------------------------------------
# Wilcoxon signed-rank

@dataclass
class WilcoxonResult:
    W: float  # min(W+, W-)
    w_plus: float
    w_minus: float
    n_used: int  # nonzero differences
    p_two_sided: float
    method: str


def wilcoxon_signed_rank(paired_diffs) -> WilcoxonResult:
    """Two-sided signed-rank test on paired differences (zeros dropped)."""
    diffs = np.array([float(d) for d in paired_diffs])
    diffs = diffs[diffs != 0]
    n = len(diffs)
    if n == 0:
        raise StatsError("all differences are zero")
    ranks = rankdata(np.abs(diffs))
    w_plus = float(ranks[diffs > 0].sum())
    total = float(ranks.sum())  # == n(n+1)/2
    w_minus = total - w_plus
    w_small = min(w_plus, w_minus)

    if n <= EXACT_LIMIT:
        # enumerate all sign assignments; ranks stay fixed
        le = 0
        ge = 0
        count = 1 << n
        for bits in range(count):
            w = 0.0
            for i in range(n):
                if bits >> i & 1:
                    w += ranks[i]
            if w <= w_small + 1e-9:
                le += 1
            if w >= total - w_small - 1e-9:
                ge += 1
        p = min(1.0, (le + ge) / count)
        return WilcoxonResult(w_small, w_plus, w_minus, n, p, "exact")

    mu = total / 2.0
    var = float((ranks**2).sum()) / 4.0
    z = max(abs(w_plus - mu) - 0.5, 0.0) / math.sqrt(var)
    p = min(1.0, 2.0 * _normal_sf(z))
    return WilcoxonResult(w_small, w_plus, w_minus, n, p, "normal")


# --------------------------------------------------------------------------
# corrections and scoreboards

def bonferroni(p_values, m: int | None = None) -> list[float]:
    """p_adj = min(1, m * p); m defaults to the number of p-values."""
    p_values = list(p_values)
    if m is None:
        m = len(p_values)
    if m < 0:
        raise StatsError("m must be non-negative")
    return [min(1.0, m * float(p)) for p in p_values]


@dataclass
class TwoProportionResult:
    z: float
    p_two_sided: float


def two_proportion_z(k1: int, n1: int, k2: int, n2: int) -> TwoProportionResult:
    if min(n1, n2) < 1:
        raise StatsError("both groups need at least one observation")
    p1, p2 = k1 / n1, k2 / n2
    pooled = (k1 + k2) / (n1 + n2)
    denom = pooled * (1 - pooled) * (1 / n1 + 1 / n2)
    if denom <= 0:
        return TwoProportionResult(0.0, 1.0)
    z = (p1 - p2) / math.sqrt(denom)
    return TwoProportionResult(z, min(1.0, 2.0 * _normal_sf(abs(z))))


@dataclass
class SandhiScoreboard:
    category: str
    accuracy_per_system: dict[str, float]
    errors_per_phrase_per_system: dict[str, float]
    n_per_system: dict[str, int]
    pairwise_test: dict[tuple[str, str], TwoProportionResult]


def sandhi_scoreboard(judgments: list[SandhiJudgment], category: str) -> SandhiScoreboard:
    """Accuracy (share of error-free samples) and mean errors per phrase.

    Pairwise system differences are compared with a two-proportion z-test
    on accuracy.
    """
    if not judgments:
        raise StatsError("no judgments")
    cats = {j.category for j in judgments}
    if cats != {category}:
        raise StatsError(f"mixed or wrong categories: expected {category!r}, got {sorted(cats)}")

    by_system: dict[str, list[SandhiJudgment]] = {}
    for j in judgments:
        by_system.setdefault(j.system, []).append(j)

    accuracy = {
        s: sum(1 for j in js if j.n_errors == 0) / len(js) for s, js in by_system.items()
    }
    errors = {s: float(np.mean([j.n_errors for j in js])) for s, js in by_system.items()}
    counts = {s: len(js) for s, js in by_system.items()}

    pairwise: dict[tuple[str, str], TwoProportionResult] = {}
    systems = sorted(by_system)
    for s1, s2 in itertools.combinations(systems, 2):
        k1 = sum(1 for j in by_system[s1] if j.n_errors == 0)
        k2 = sum(1 for j in by_system[s2] if j.n_errors == 0)
        pairwise[(s1, s2)] = two_proportion_z(k1, counts[s1], k2, counts[s2])

    return SandhiScoreboard(category, accuracy, errors, counts, pairwise)
