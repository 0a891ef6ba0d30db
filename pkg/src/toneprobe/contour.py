"""Per-syllable f0 contours: normalization, LOESS fits, tone classification.

Contours are time-normalized by linear resampling over the syllable's voiced
span and expressed in semitones relative to a reference frequency (the
utterance median). Onset and offset are means over the first and last 20% of
the resampled points, which keeps them robust to tracker jitter at voicing
edges. Classification follows the onset/offset class table: High/High -> 1,
Low/High -> 2, Low/Low -> 3, High/Low -> 4.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _sstats

ONSET_CLASS = {1: "High", 2: "Low", 3: "Low", 4: "High"}
OFFSET_CLASS = {1: "High", 2: "High", 3: "Low", 4: "Low"}
_TONE_BY_CLASS = {
    ("High", "High"): 1,
    ("Low", "High"): 2,
    ("Low", "Low"): 3,
    ("High", "Low"): 4,
}

DEFAULT_N_POINTS = 30


class ContourError(ValueError):
    pass


class LoessError(ValueError):
    pass


@dataclass(frozen=True)
class ContourFeatures:
    normalized_f0: np.ndarray  # semitones re reference, time-normalized
    onset_st: float
    offset_st: float
    max_st: float
    min_st: float
    onset_class: str  # class at the 0 st (reference-median) threshold
    offset_class: str


def semitones(f0_hz, reference_hz: float) -> np.ndarray:
    return 12.0 * np.log2(np.asarray(f0_hz, dtype=np.float64) / reference_hz)


def normalize_contour(
    samples, utterance_median: float, n_points: int = DEFAULT_N_POINTS
) -> ContourFeatures:
    """Resample voiced f0 (Hz) to n_points and convert to semitones."""
    samples = np.asarray(samples, dtype=np.float64)
    if n_points < 5:
        raise ContourError("n_points must be at least 5")
    if samples.size < 3:
        raise ContourError(
            f"unmeasurable syllable: {samples.size} voiced samples (need >= 3)"
        )
    if not utterance_median > 0:
        raise ContourError(f"reference median must be positive, got {utterance_median}")
    if np.any(~np.isfinite(samples)) or np.any(samples <= 0):
        raise ContourError("voiced f0 samples must be finite and positive")

    st = semitones(samples, utterance_median)
    src = np.linspace(0.0, 1.0, samples.size)
    dst = np.linspace(0.0, 1.0, n_points)
    contour = np.interp(dst, src, st)

    k = max(1, int(round(0.2 * n_points)))
    onset = float(np.mean(contour[:k]))
    offset = float(np.mean(contour[-k:]))
    return ContourFeatures(
        normalized_f0=contour,
        onset_st=onset,
        offset_st=offset,
        max_st=float(np.max(contour)),
        min_st=float(np.min(contour)),
        onset_class="High" if onset >= 0.0 else "Low",
        offset_class="High" if offset >= 0.0 else "Low",
    )


def classify_tone(features: ContourFeatures, threshold_st: float = 0.0) -> int:
    """Map onset/offset levels to a tone via the class table."""
    onset = "High" if features.onset_st >= threshold_st else "Low"
    offset = "High" if features.offset_st >= threshold_st else "Low"
    return _TONE_BY_CLASS[(onset, offset)]


# --------------------------------------------------------------------------
# LOESS

@dataclass
class LoessFit:
    grid_x: np.ndarray
    fitted: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    se: np.ndarray
    df: np.ndarray


def loess_fit(x, y, span: float = 0.75, degree: int = 2, grid=None) -> LoessFit:
    """Local weighted polynomial regression with tricube weights.

    At each grid point the span-nearest neighbors are fit by weighted least
    squares; the 95% band comes from the pointwise standard error of the
    local fit (t-based, with the local residual variance).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LoessError("x and y must be 1-D arrays of equal length")
    n = x.size
    if degree not in (1, 2):
        raise LoessError(f"degree must be 1 or 2, got {degree}")
    p = degree + 1
    if n < degree + 2:
        raise LoessError(f"need at least {degree + 2} points, got {n}")
    if not 0 < span <= 1:
        raise LoessError(f"span must be in (0, 1], got {span}")
    r = int(np.ceil(span * n))
    if r < p:
        raise LoessError(f"span * n = {r} must be at least degree + 1 = {p}")
    grid = np.sort(np.unique(x)) if grid is None else np.asarray(grid, dtype=np.float64)

    dist = np.abs(x[None, :] - grid[:, None])  # (G, N)
    h = np.partition(dist, r - 1, axis=1)[:, r - 1]
    if np.any(h <= 0):
        g = grid[np.flatnonzero(h <= 0)[0]]
        raise LoessError(f"degenerate local design at x={g}: all neighbors at one x")
    w = (1.0 - np.clip(dist / h[:, None], 0.0, 1.0) ** 3) ** 3

    centered = x[None, :] - grid[:, None]
    design = np.stack([centered**k for k in range(p)], axis=2)  # (G, N, p)
    a_mat = np.einsum("gn,gnj,gnk->gjk", w, design, design)
    b_vec = np.einsum("gn,gnj,n->gj", w, design, y)
    try:
        beta = np.linalg.solve(a_mat, b_vec[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError as exc:
        raise LoessError(f"degenerate local design: {exc}") from exc
    fitted = beta[:, 0]

    resid = y[None, :] - np.einsum("gnk,gk->gn", design, beta)
    rss = np.einsum("gn,gn->g", w, resid**2)
    m = (w > 0).sum(axis=1)
    df = np.maximum(m - p, 1)
    sigma2 = rss / df

    e1 = np.zeros((grid.size, p, 1))
    e1[:, 0, 0] = 1.0
    try:
        u = np.linalg.solve(a_mat, e1)[:, :, 0]
    except np.linalg.LinAlgError as exc:  # pragma: no cover - caught above
        raise LoessError(f"degenerate local design: {exc}") from exc
    m2 = np.einsum("gn,gnj,gnk->gjk", w**2, design, design)
    var_factor = np.maximum(np.einsum("gj,gjk,gk->g", u, m2, u), 0.0)
    se = np.sqrt(sigma2 * var_factor)
    tq = _sstats.t.ppf(0.975, df)
    return LoessFit(
        grid_x=grid,
        fitted=fitted,
        ci_low=fitted - tq * se,
        ci_high=fitted + tq * se,
        se=se,
        df=df.astype(np.int64),
    )


# --------------------------------------------------------------------------
# Coarticulation summary

@dataclass(frozen=True)
class CoartRecord:
    """One measured target syllable plus its tonal context.

    ``prev_offset_class`` is set on carry-over rows (the target follows that
    context); ``next_onset_class`` on anticipatory rows (the target precedes
    it). Exactly one of the two is normally set per row.
    """

    stimulus_id: str
    tone: int
    features: ContourFeatures
    prev_offset_class: str | None = None
    next_onset_class: str | None = None


@dataclass
class EffectCell:
    tone: int
    n_high: int
    n_low: int
    mean_high: float
    mean_low: float
    effect: float


@dataclass
class LoessCurve:
    kind: str  # carryover | anticipatory
    tone: int
    context: str  # High | Low
    fit: LoessFit


@dataclass
class CoartSummary:
    carryover: dict[int, EffectCell] = field(default_factory=dict)
    anticipatory: dict[int, EffectCell] = field(default_factory=dict)
    curves: list[LoessCurve] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _effect_cells(rows, context_of, value_of, positive_context, kind):
    """Per-tone mean difference between context classes.

    ``positive_context`` names the class whose mean enters with a plus sign:
    High for carry-over (assimilation raises onsets after High offsets), Low
    for anticipation (dissimilation raises maxima before Low onsets).
    """
    cells: dict[int, EffectCell] = {}
    warnings: list[str] = []
    for tone in sorted({r.tone for r in rows}):
        by_class = {"High": [], "Low": []}
        for r in rows:
            if r.tone == tone:
                by_class[context_of(r)].append(value_of(r))
        if not by_class["High"] or not by_class["Low"]:
            warnings.append(f"{kind}: tone {tone} omitted, empty condition cell")
            continue
        mean_high = float(np.mean(by_class["High"]))
        mean_low = float(np.mean(by_class["Low"]))
        sign = 1.0 if positive_context == "High" else -1.0
        cells[tone] = EffectCell(
            tone=tone,
            n_high=len(by_class["High"]),
            n_low=len(by_class["Low"]),
            mean_high=mean_high,
            mean_low=mean_low,
            effect=sign * (mean_high - mean_low),
        )
    return cells, warnings


def coarticulation_summary(
    records: list[CoartRecord],
    span: float = 0.75,
    degree: int = 2,
    n_grid: int = DEFAULT_N_POINTS,
    with_curves: bool = True,
) -> CoartSummary:
    """Carry-over and anticipatory effect sizes per target tone.

    Carry-over: mean onset after High-offset contexts minus after Low-offset
    contexts. Anticipatory: mean contour maximum before Low-onset contexts
    minus before High-onset contexts (positive = dissimilatory raising).
    """
    summary = CoartSummary()

    carry_rows = [r for r in records if r.prev_offset_class in ("High", "Low")]
    cells, warns = _effect_cells(
        carry_rows,
        lambda r: r.prev_offset_class,
        lambda r: r.features.onset_st,
        "High",
        "carryover",
    )
    summary.carryover = cells
    summary.warnings.extend(warns)

    antic_rows = [r for r in records if r.next_onset_class in ("High", "Low")]
    cells, warns = _effect_cells(
        antic_rows,
        lambda r: r.next_onset_class,
        lambda r: r.features.max_st,
        "Low",
        "anticipatory",
    )
    summary.anticipatory = cells
    summary.warnings.extend(warns)

    if with_curves:
        grid = np.linspace(0.0, 1.0, n_grid)
        groups: dict[tuple[str, int, str], list[np.ndarray]] = {}
        for r in carry_rows:
            groups.setdefault(("carryover", r.tone, r.prev_offset_class), []).append(
                r.features.normalized_f0
            )
        for r in antic_rows:
            groups.setdefault(("anticipatory", r.tone, r.next_onset_class), []).append(
                r.features.normalized_f0
            )
        for (kind, tone, ctx), contours in sorted(groups.items()):
            stacked = np.vstack(contours)
            xs = np.tile(np.linspace(0.0, 1.0, stacked.shape[1]), stacked.shape[0])
            ys = stacked.ravel()
            try:
                fit = loess_fit(xs, ys, span=span, degree=degree, grid=grid)
            except LoessError as exc:
                summary.warnings.append(f"{kind} tone {tone} {ctx}: no curve ({exc})")
                continue
            summary.curves.append(LoessCurve(kind, tone, ctx, fit))

    return summary
