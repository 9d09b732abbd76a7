"""Basis-set JSON format and automatic selection by acquisition match."""

from __future__ import annotations

import json
from typing import Sequence

import numpy as np

from ..errors import ParseError, SelectionError
from ..types import AcqTags, AcquisitionParams, BasisEntry, BasisSet

BASIS_FORMAT = "mrskit-basis-v1"

FIELD_TOLERANCE_T = 0.1
ECHO_TOLERANCE_MS = 5.0


def parse_basis(doc: str | bytes) -> BasisSet:
    """Parse a native-format basis document into a validated BasisSet."""
    try:
        obj = json.loads(doc)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e}") from None
    if obj.get("format") != BASIS_FORMAT:
        raise ParseError(
            f"unsupported format tag {obj.get('format')!r}; expected {BASIS_FORMAT!r}"
        )
    tags = obj.get("acq_tags")
    if not tags:
        raise ParseError("missing 'acq_tags' section")
    try:
        acq_tags = AcqTags(
            field_strength=float(tags["field_strength"]),
            sequence=str(tags["sequence"]),
            echo_time=float(tags["echo_time"]),
        )
    except KeyError as e:
        raise ParseError(f"acq_tags missing key {e}") from None
    entries = []
    for raw in obj.get("entries", []):
        if "name" not in raw or "samples" not in raw:
            raise ParseError("each entry needs 'name' and 'samples'")
        samples = np.asarray(raw["samples"], dtype=float)
        if samples.ndim != 1 or len(samples) % 2 != 0:
            raise ParseError(
                f"entry {raw['name']!r}: samples must be a flat interleaved array"
            )
        entries.append(
            BasisEntry(name=str(raw["name"]), m=samples[0::2] + 1j * samples[1::2])
        )
    # BasisSet validates uniqueness, non-emptiness, and equal lengths.
    return BasisSet(entries=entries, acq_tags=acq_tags)


def write_basis(basis: BasisSet) -> str:
    entries = []
    for e in basis.entries:
        samples = np.empty(2 * len(e.m))
        samples[0::2] = e.m.real
        samples[1::2] = e.m.imag
        entries.append({"name": e.name, "samples": samples.tolist()})
    return json.dumps(
        {
            "format": BASIS_FORMAT,
            "acq_tags": basis.acq_tags.to_dict(),
            "entries": entries,
        }
    )


def _describe(tags: AcqTags) -> str:
    return f"{tags.field_strength:g}T/{tags.sequence}/TE={tags.echo_time:g}ms"


def select_basis(catalog: Sequence[BasisSet], acq: AcquisitionParams) -> BasisSet:
    """Pick the unique catalog entry matching the acquisition.

    A candidate matches when field strength differs by less than 0.1 T,
    the sequence name matches (case-insensitive), and echo time differs by
    less than 5 ms. Zero or multiple matches raise, never a silent pick.
    """
    if not catalog:
        raise SelectionError("basis catalog is empty")
    matches = [
        b
        for b in catalog
        if abs(b.acq_tags.field_strength - acq.field_strength) < FIELD_TOLERANCE_T
        and b.acq_tags.sequence.strip().lower() == acq.sequence.strip().lower()
        and abs(b.acq_tags.echo_time - acq.echo_time) < ECHO_TOLERANCE_MS
    ]
    described = sorted(_describe(b.acq_tags) for b in catalog)
    if not matches:
        raise SelectionError(
            f"no basis matches {acq.field_strength:g}T/{acq.sequence}/"
            f"TE={acq.echo_time:g}ms; candidates: {', '.join(described)}",
            candidates=described,
        )
    if len(matches) > 1:
        ambiguous = sorted(_describe(b.acq_tags) for b in matches)
        raise SelectionError(
            f"ambiguous basis selection; matches: {', '.join(ambiguous)}",
            candidates=ambiguous,
        )
    return matches[0]
