"""Method-agreement analysis: Bland-Altman and reference-range checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats as sps

from .errors import ValidationError
from .stats import BoxplotStats, boxplot_stats, compute_indicator, resolve_indicator
from .types import QuantResult

LOA_FACTOR = 1.96

# Ratios compared by default between the two quantifiers.
DEFAULT_INDICATORS = ("tNAA/tCr", "tCho/tCr", "Glx/tCr", "Ins/tCr", "GSH/tCr")


@dataclass
class BlandAltman:
    """Paired-difference agreement summary between two methods.

    Differences are method A minus method B; limits of agreement are the
    mean difference -/+ 1.96 SD. p_value tests the mean difference against
    zero (one-sample t by default, z when requested); it is None when the
    differences have zero spread, flagged by ``degenerate``.
    """

    mean_diff: float
    sd_diff: float
    loa_low: float
    loa_high: float
    pct_within: float
    p_value: float | None
    degenerate: bool
    points: list[tuple[float, float]]  # (pair mean, pair difference)

    def to_dict(self) -> dict:
        return {
            "mean_diff": self.mean_diff,
            "sd_diff": self.sd_diff,
            "loa_low": self.loa_low,
            "loa_high": self.loa_high,
            "pct_within": self.pct_within,
            "p_value": self.p_value,
            "degenerate": self.degenerate,
            "points": [[m, d] for m, d in self.points],
        }


def bland_altman(
    x: Sequence[float], y: Sequence[float], use_z: bool = False
) -> BlandAltman:
    """Bland-Altman statistics for subject-paired method values."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise ValidationError(f"paired lengths differ: {len(x)} vs {len(y)}")
    if len(x) < 3:
        raise ValidationError("Bland-Altman needs at least 3 pairs")
    diffs = x - y
    means = (x + y) / 2.0
    mean_diff = float(np.mean(diffs))
    sd_diff = float(np.std(diffs, ddof=1))
    loa_low = mean_diff - LOA_FACTOR * sd_diff
    loa_high = mean_diff + LOA_FACTOR * sd_diff
    within = np.sum((diffs >= loa_low) & (diffs <= loa_high))
    degenerate = sd_diff == 0.0
    if degenerate:
        p = None
    elif use_z:
        z = mean_diff / (sd_diff / np.sqrt(len(diffs)))
        p = float(min(2.0 * sps.norm.sf(abs(z)), 1.0))
    else:
        p = float(sps.ttest_1samp(diffs, 0.0).pvalue)
    return BlandAltman(
        mean_diff=mean_diff,
        sd_diff=sd_diff,
        loa_low=loa_low,
        loa_high=loa_high,
        pct_within=float(100.0 * within / len(diffs)),
        p_value=p,
        degenerate=degenerate,
        points=[(float(m), float(d)) for m, d in zip(means, diffs)],
    )


@dataclass(frozen=True)
class ReferenceRange:
    """Literature range for an indicator: low/mean/high guide lines."""

    indicator: str
    low: float
    mean: float
    high: float

    def __post_init__(self):
        if not (self.low < self.mean < self.high):
            raise ValidationError("reference range requires low < mean < high")

    def to_dict(self) -> dict:
        return {
            "indicator": self.indicator,
            "low": self.low,
            "mean": self.mean,
            "high": self.high,
        }


@dataclass
class RangeCheck:
    n_within: int
    n_below: int
    n_above: int
    boxplot: BoxplotStats
    reference: ReferenceRange

    def to_dict(self) -> dict:
        return {
            "n_within": self.n_within,
            "n_below": self.n_below,
            "n_above": self.n_above,
            "boxplot": self.boxplot.to_dict(),
            "reference": self.reference.to_dict(),
        }


def range_check(values: Sequence[float], reference: ReferenceRange) -> RangeCheck:
    """Classify values against the closed interval [low, high]."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValidationError("range check needs at least one value")
    return RangeCheck(
        n_within=int(np.sum((v >= reference.low) & (v <= reference.high))),
        n_below=int(np.sum(v < reference.low)),
        n_above=int(np.sum(v > reference.high)),
        boxplot=boxplot_stats(v),
        reference=reference,
    )


@dataclass
class IndicatorAgreement:
    indicator: str
    bland_altman: BlandAltman
    range_a: RangeCheck | None = None
    range_b: RangeCheck | None = None

    def to_dict(self) -> dict:
        return {
            "indicator": self.indicator,
            "bland_altman": self.bland_altman.to_dict(),
            "range_a": self.range_a.to_dict() if self.range_a else None,
            "range_b": self.range_b.to_dict() if self.range_b else None,
        }


@dataclass
class ConsistencyReport:
    method_a: str
    method_b: str
    agreements: list[IndicatorAgreement]
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": "consistency",
            "method_a": self.method_a,
            "method_b": self.method_b,
            "agreements": [a.to_dict() for a in self.agreements],
            "warnings": list(self.warnings),
        }

    def to_rows(self) -> tuple[tuple, list[tuple]]:
        columns = (
            "indicator",
            "mean_diff",
            "sd_diff",
            "loa_low",
            "loa_high",
            "pct_within",
            "p_value",
        )
        rows = [
            (
                a.indicator,
                a.bland_altman.mean_diff,
                a.bland_altman.sd_diff,
                a.bland_altman.loa_low,
                a.bland_altman.loa_high,
                a.bland_altman.pct_within,
                a.bland_altman.p_value,
            )
            for a in self.agreements
        ]
        return columns, rows


def consistency_report(
    results_a: Sequence[QuantResult],
    results_b: Sequence[QuantResult],
    indicator_exprs: Sequence[str] = DEFAULT_INDICATORS,
    ranges: dict[str, ReferenceRange] | None = None,
    use_z: bool = False,
) -> ConsistencyReport:
    """Per-indicator Bland-Altman between two methods on the same subjects.

    Results are paired by dataset id and must cover the same subject set.
    A reference-range check per method is attached when a range is
    configured for the indicator. Default indicators that cannot be
    resolved against the basis are skipped with a warning.
    """
    if not indicator_exprs:
        raise ValidationError("no indicators requested")
    by_a = {r.dataset_id: r for r in results_a}
    by_b = {r.dataset_id: r for r in results_b}
    missing = sorted(set(by_a) ^ set(by_b))
    if missing:
        raise ValidationError(
            "subjects not quantified by both methods: " + ", ".join(missing)
        )
    subjects = sorted(by_a)
    ordered_a = [by_a[s] for s in subjects]
    ordered_b = [by_b[s] for s in subjects]
    available = set(ordered_a[0].metabolites)
    ranges = ranges or {}

    report = ConsistencyReport(
        method_a=ordered_a[0].method if ordered_a else "a",
        method_b=ordered_b[0].method if ordered_b else "b",
        agreements=[],
    )
    for expr in indicator_exprs:
        try:
            ind = resolve_indicator(expr, sorted(available))
        except ValidationError as e:
            report.warnings.append(f"{expr}: skipped ({e})")
            continue
        va = compute_indicator(ordered_a, ind)
        vb = compute_indicator(ordered_b, ind)
        valid = sorted(set(va.subject_ids) & set(vb.subject_ids))
        dropped = [s for s in subjects if s not in valid]
        if dropped:
            report.warnings.append(
                f"{expr}: excluded (zero denominator): " + ", ".join(dropped)
            )
        pos_a = {s: i for i, s in enumerate(va.subject_ids)}
        pos_b = {s: i for i, s in enumerate(vb.subject_ids)}
        x = np.array([va.values[pos_a[s]] for s in valid])
        y = np.array([vb.values[pos_b[s]] for s in valid])
        ba = bland_altman(x, y, use_z=use_z)
        ref = ranges.get(expr)
        report.agreements.append(
            IndicatorAgreement(
                indicator=expr,
                bland_altman=ba,
                range_a=range_check(x, ref) if ref else None,
                range_b=range_check(y, ref) if ref else None,
            )
        )
    return report
