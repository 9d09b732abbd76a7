"""Tabular exports of quantification results and analysis reports."""

from __future__ import annotations

import csv
import io
import json
from typing import Sequence

from ..errors import ValidationError
from ..types import QuantResult

RESULT_COLUMNS = (
    "dataset",
    "metabolite",
    "conc",
    "ratio_to_tcr",
    "sd_percent",
    "method",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def export_table(columns: Sequence[str], rows: Sequence[Sequence], fmt: str) -> str:
    """Render a table as CSV (LF line endings) or structured text (JSON)."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()
    if fmt == "json":
        return json.dumps(
            {"columns": list(columns), "rows": [[_fmt(v) for v in r] for r in rows]},
            sort_keys=True,
        )
    raise ValidationError(f"unknown export format {fmt!r}; use 'csv' or 'json'")


def export_results(results: Sequence[QuantResult], fmt: str = "csv") -> str:
    """One row per (dataset, metabolite), dataset order then basis order."""
    if not results:
        raise ValidationError("nothing to export: empty result list")
    rows = []
    for r in results:
        for name in r.metabolites:
            rows.append(
                (
                    r.dataset_id,
                    name,
                    None if r.conc is None else r.conc.get(name),
                    r.ratio_to_tcr.get(name),
                    None if r.sd_percent is None else r.sd_percent.get(name),
                    r.method,
                )
            )
    return export_table(RESULT_COLUMNS, rows, fmt)
