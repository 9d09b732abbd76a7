"""Group statistics over quantified indicators.

Indicator values are ratios of metabolite-set sums per subject. The test
path follows a gated procedure: Shapiro-Wilk normality on both groups; if
both pass, a two-stage t-test (Levene's test choosing pooled Student vs
Welch); otherwise the Mann-Whitney U test, exact by enumeration for small
samples.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats as sps

from .errors import DegenerateDataError, ValidationError
from .types import QuantResult

ALPHA = 0.05

EXACT_MANN_WHITNEY_MAX_N = 20

COMPOSITES = {
    "tNAA": ("NAA", "NAAG"),
    "tCr": ("Cr", "PCr"),
    "tCho": ("GPC", "PCh", "Cho"),
    "Glx": ("Glu", "Gln"),
}

# Pre-registered indicator sets for the two shipped disease profiles.
GLIOMA_INDICATORS = ("tCho/tCr", "tCho/tNAA", "tNAA/tCr")
PARKINSONS_INDICATORS = ("tNAA/tCr", "tCho/tCr", "tNAA/tCho")


@dataclass(frozen=True)
class Indicator:
    """A named ratio of metabolite-set sums, e.g. NAA/Cr or tCho/tCr."""

    name: str
    numerator: tuple[str, ...]
    denominator: tuple[str, ...]

    def __post_init__(self):
        if not self.denominator:
            raise ValidationError("indicator denominator must be nonempty")
        if not self.numerator:
            raise ValidationError("indicator numerator must be nonempty")


def _resolve_term(term: str, available: Sequence[str]) -> tuple[str, ...]:
    term = term.strip()
    if term in COMPOSITES:
        members = tuple(m for m in COMPOSITES[term] if m in available)
        if not members:
            raise ValidationError(
                f"no member of composite {term!r} "
                f"({', '.join(COMPOSITES[term])}) is in the basis"
            )
        return members
    if term in available:
        return (term,)
    raise ValidationError(f"metabolite {term!r} not among {sorted(available)}")


def resolve_indicator(expr: str, available: Sequence[str]) -> Indicator:
    """Build an Indicator from 'NUM/DEN' syntax against available metabolites.

    Composite names (tNAA, tCr, tCho, Glx) expand to whichever of their
    members the basis provides.
    """
    parts = expr.split("/")
    if len(parts) != 2:
        raise ValidationError(f"indicator {expr!r} must have the form NUM/DEN")
    return Indicator(
        name=expr,
        numerator=_resolve_term(parts[0], available),
        denominator=_resolve_term(parts[1], available),
    )


@dataclass
class IndicatorValues:
    indicator: str
    subject_ids: list[str]
    values: np.ndarray
    excluded: list[str] = field(default_factory=list)


def compute_indicator(
    results: Sequence[QuantResult], indicator: Indicator
) -> IndicatorValues:
    """Per-subject indicator values: sum(numerator) / sum(denominator).

    Uses absolute concentrations when present, ratio-to-tCr otherwise
    (the ratio of sums is identical either way). Subjects with a zero
    denominator are excluded and listed, not errored.
    """
    ids, vals, excluded = [], [], []
    for r in results:
        source = r.conc if r.conc is not None else r.ratio_to_tcr
        for name in (*indicator.numerator, *indicator.denominator):
            if name not in source:
                raise ValidationError(
                    f"metabolite {name!r} missing from result {r.dataset_id or '<anon>'}"
                )
        num = sum(source[n] for n in indicator.numerator)
        den = sum(source[n] for n in indicator.denominator)
        if den == 0:
            excluded.append(r.dataset_id)
            continue
        ids.append(r.dataset_id)
        vals.append(num / den)
    return IndicatorValues(
        indicator=indicator.name,
        subject_ids=ids,
        values=np.asarray(vals, dtype=float),
        excluded=excluded,
    )


# --------------------------------------------------------------------------
# Hypothesis tests


def shapiro_wilk(samples: Sequence[float]) -> float:
    """Shapiro-Wilk normality p-value for 3 <= n <= 5000."""
    x = np.asarray(samples, dtype=float)
    if len(x) < 3:
        raise ValidationError("Shapiro-Wilk needs at least 3 samples")
    if len(x) > 5000:
        raise ValidationError("Shapiro-Wilk supports at most 5000 samples")
    if np.ptp(x) == 0:
        raise DegenerateDataError("constant sample has no normality p-value")
    return float(sps.shapiro(x).pvalue)


@dataclass(frozen=True)
class LeveneResult:
    statistic: float
    p_value: float


def levene(a: Sequence[float], b: Sequence[float]) -> LeveneResult:
    """Classical mean-centered Levene test of equal variances (two groups)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise ValidationError("Levene's test needs at least 2 samples per group")
    w, p = sps.levene(a, b, center="mean")
    if not np.isfinite(w):
        raise DegenerateDataError("Levene statistic undefined (zero spread)")
    return LeveneResult(statistic=float(w), p_value=float(p))


@dataclass(frozen=True)
class GroupSummary:
    label: str
    n: int
    mean: float
    sd: float

    def to_dict(self) -> dict:
        return {"label": self.label, "n": self.n, "mean": self.mean, "sd": self.sd}


@dataclass(frozen=True)
class TestReport:
    indicator: str
    group_a: GroupSummary
    group_b: GroupSummary
    test_used: str  # student_t | welch_t | mann_whitney
    statistic: float
    p_value: float

    @property
    def significant(self) -> bool:
        return self.p_value < ALPHA

    def to_dict(self) -> dict:
        return {
            "indicator": self.indicator,
            "group_a": self.group_a.to_dict(),
            "group_b": self.group_b.to_dict(),
            "test_used": self.test_used,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "significant": self.significant,
        }


def _summaries(a, b, label_a, label_b):
    def one(x, label):
        x = np.asarray(x, dtype=float)
        sd = float(np.std(x, ddof=1)) if len(x) > 1 else 0.0
        return GroupSummary(label, len(x), float(np.mean(x)), sd)

    return one(a, label_a), one(b, label_b)


def two_stage_t_test(
    a: Sequence[float],
    b: Sequence[float],
    indicator: str = "",
    label_a: str = "a",
    label_b: str = "b",
) -> TestReport:
    """Levene-gated independent t-test: pooled Student or Welch, two-tailed."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise ValidationError("t-test needs at least 2 samples per group")
    if np.ptp(a) == 0 and np.ptp(b) == 0:
        raise DegenerateDataError("both groups are constant; t undefined")
    equal_var = levene(a, b).p_value >= ALPHA
    t, p = sps.ttest_ind(a, b, equal_var=equal_var)
    sa, sb = _summaries(a, b, label_a, label_b)
    return TestReport(
        indicator=indicator,
        group_a=sa,
        group_b=sb,
        test_used="student_t" if equal_var else "welch_t",
        statistic=float(t),
        p_value=float(p),
    )


def _u_statistic(a: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray]:
    pooled = np.concatenate([a, b])
    ranks = sps.rankdata(pooled)  # mid-ranks for ties
    r_a = float(np.sum(ranks[: len(a)]))
    u_a = r_a - len(a) * (len(a) + 1) / 2.0
    return u_a, ranks


def _exact_mw_p(ranks: np.ndarray, n_a: int, u_obs: float) -> float:
    """Two-tailed p by full enumeration over observed pooled mid-ranks."""
    n = len(ranks)
    mu = n_a * (n - n_a) / 2.0
    offset = n_a * (n_a + 1) / 2.0
    dev = abs(u_obs - mu) - 1e-12  # tolerate float jitter at the boundary
    hits = total = 0
    for comb in itertools.combinations(range(n), n_a):
        u = sum(ranks[i] for i in comb) - offset
        total += 1
        if abs(u - mu) >= dev:
            hits += 1
    return hits / total


def _approx_mw_p(ranks: np.ndarray, n_a: int, u_obs: float) -> float:
    n = len(ranks)
    n_b = n - n_a
    mu = n_a * n_b / 2.0
    _, counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(counts**3 - counts)) / (n * (n - 1))
    var = n_a * n_b / 12.0 * ((n + 1) - tie_term)
    if var <= 0:
        return 1.0
    dev = abs(u_obs - mu)
    z = max(dev - 0.5, 0.0) / math.sqrt(var)  # continuity correction
    return float(min(2.0 * sps.norm.sf(z), 1.0))


def mann_whitney_u(
    a: Sequence[float],
    b: Sequence[float],
    indicator: str = "",
    label_a: str = "a",
    label_b: str = "b",
) -> TestReport:
    """Mann-Whitney U test, two-tailed.

    Exact p by enumeration over the observed data (ties via mid-ranks)
    when n_a + n_b <= 20; normal approximation with tie and continuity
    corrections otherwise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 1 or len(b) < 1:
        raise ValidationError("Mann-Whitney needs at least 1 sample per group")
    u_a, ranks = _u_statistic(a, b)
    if len(a) + len(b) <= EXACT_MANN_WHITNEY_MAX_N:
        p = _exact_mw_p(ranks, len(a), u_a)
    else:
        p = _approx_mw_p(ranks, len(a), u_a)
    sa, sb = _summaries(a, b, label_a, label_b)
    return TestReport(
        indicator=indicator,
        group_a=sa,
        group_b=sb,
        test_used="mann_whitney",
        statistic=u_a,
        p_value=p,
    )


def select_and_test(
    a: Sequence[float],
    b: Sequence[float],
    indicator: str = "",
    label_a: str = "a",
    label_b: str = "b",
) -> TestReport:
    """Normality-gated test selection.

    Shapiro-Wilk on each group at alpha 0.05: both normal leads to the
    two-stage t-test, otherwise Mann-Whitney U.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 3 or len(b) < 3:
        raise ValidationError("need at least 3 samples per group for the gate")
    try:
        normal = shapiro_wilk(a) >= ALPHA and shapiro_wilk(b) >= ALPHA
    except DegenerateDataError:
        normal = False  # constant group: fall through to the rank test
    if normal:
        return two_stage_t_test(a, b, indicator, label_a, label_b)
    return mann_whitney_u(a, b, indicator, label_a, label_b)


# --------------------------------------------------------------------------
# Box plots


@dataclass(frozen=True)
class BoxplotStats:
    """Five-number summary with Tukey outliers.

    Quartiles use linear interpolation of order statistics (numpy's
    default percentile convention); min/max are whisker ends, i.e. the
    most extreme values within 1.5 IQR of the quartiles, with points
    beyond listed in outliers.
    """

    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    outliers: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "min": self.minimum,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "max": self.maximum,
            "outliers": list(self.outliers),
        }


def boxplot_stats(values: Sequence[float]) -> BoxplotStats:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValidationError("boxplot needs at least one value")
    q1, median, q3 = (float(q) for q in np.percentile(v, [25, 50, 75]))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    outliers = tuple(sorted(float(x) for x in v[(v < lo_fence) | (v > hi_fence)]))
    return BoxplotStats(
        minimum=float(inside.min()),
        q1=q1,
        median=median,
        q3=q3,
        maximum=float(inside.max()),
        outliers=outliers,
    )


# --------------------------------------------------------------------------
# Full statistics report over two groups of quantification results


@dataclass
class IndicatorAnalysis:
    indicator: str
    test: TestReport
    boxplot_a: BoxplotStats
    boxplot_b: BoxplotStats

    def to_dict(self) -> dict:
        return {
            "indicator": self.indicator,
            "test": self.test.to_dict(),
            "boxplot_a": self.boxplot_a.to_dict(),
            "boxplot_b": self.boxplot_b.to_dict(),
        }


@dataclass
class StatisticsReport:
    label_a: str
    label_b: str
    analyses: list[IndicatorAnalysis]
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": "statistics",
            "label_a": self.label_a,
            "label_b": self.label_b,
            "analyses": [a.to_dict() for a in self.analyses],
            "warnings": list(self.warnings),
        }

    def to_rows(self) -> tuple[tuple, list[tuple]]:
        """Summary table: one row per indicator with means, test, and p."""
        columns = (
            "indicator",
            f"{self.label_a}_mean_sd",
            f"{self.label_b}_mean_sd",
            "test_used",
            "statistic",
            "p_value",
            "significant",
        )
        rows = []
        for a in self.analyses:
            t = a.test
            rows.append(
                (
                    a.indicator,
                    f"{t.group_a.mean:.6g}+/-{t.group_a.sd:.6g} (n={t.group_a.n})",
                    f"{t.group_b.mean:.6g}+/-{t.group_b.sd:.6g} (n={t.group_b.n})",
                    t.test_used,
                    t.statistic,
                    t.p_value,
                    t.significant,
                )
            )
        return columns, rows


def analyze_groups(
    results_a: Sequence[QuantResult],
    results_b: Sequence[QuantResult],
    indicator_exprs: Sequence[str],
    label_a: str = "group_a",
    label_b: str = "group_b",
) -> StatisticsReport:
    """Per-indicator gated tests plus per-group box plots."""
    if not indicator_exprs:
        raise ValidationError("no indicators requested")
    if not results_a or not results_b:
        raise ValidationError("both groups need quantification results")
    available = set(results_a[0].metabolites)
    report = StatisticsReport(label_a=label_a, label_b=label_b, analyses=[])
    for expr in indicator_exprs:
        ind = resolve_indicator(expr, sorted(available))
        va = compute_indicator(results_a, ind)
        vb = compute_indicator(results_b, ind)
        for ds in (*va.excluded, *vb.excluded):
            report.warnings.append(
                f"{expr}: subject {ds} excluded (zero denominator)"
            )
        test = select_and_test(va.values, vb.values, expr, label_a, label_b)
        report.analyses.append(
            IndicatorAnalysis(
                indicator=expr,
                test=test,
                boxplot_a=boxplot_stats(va.values),
                boxplot_b=boxplot_stats(vb.values),
            )
        )
    return report
