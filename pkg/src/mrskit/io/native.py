"""Platform-native JSON spectrum format (for uploads that are not .RAW)."""

from __future__ import annotations

import json

import numpy as np

from ..errors import ParseError
from ..types import AcquisitionParams, Spectrum

SPECTRUM_FORMAT = "mrskit-spectrum-v1"


def sniff_format(payload: bytes | str) -> str:
    """Guess the upload format: 'native' for the JSON schema, 'raw' otherwise."""
    head = payload[:256]
    if isinstance(head, bytes):
        head = head.decode("ascii", errors="replace")
    return "native" if head.lstrip().startswith("{") else "raw"


def parse_spectrum_json(doc: str | bytes) -> tuple[Spectrum, dict]:
    """Parse a native-format spectrum document.

    Returns the spectrum together with the raw (not yet anonymized)
    metadata map found in the file.
    """
    try:
        obj = json.loads(doc)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e}") from None
    if obj.get("format") != SPECTRUM_FORMAT:
        raise ParseError(
            f"unsupported format tag {obj.get('format')!r}; expected {SPECTRUM_FORMAT!r}"
        )
    if "acquisition" not in obj:
        raise ParseError("missing 'acquisition' section")
    if "fid" not in obj:
        raise ParseError("missing 'fid' array")
    samples = np.asarray(obj["fid"], dtype=float)
    if samples.ndim != 1 or len(samples) % 2 != 0:
        raise ParseError("'fid' must be a flat interleaved real/imag array")
    fid = samples[0::2] + 1j * samples[1::2]
    try:
        acq = AcquisitionParams.from_dict(
            {**obj["acquisition"], "num_points": len(fid)}
        )
    except (TypeError, KeyError) as e:
        raise ParseError(f"bad acquisition section: {e}") from None
    return Spectrum(fid=fid, acq=acq), dict(obj.get("meta", {}))


def write_spectrum_json(spectrum: Spectrum, meta: dict | None = None) -> str:
    samples = np.empty(2 * len(spectrum.fid))
    samples[0::2] = spectrum.fid.real
    samples[1::2] = spectrum.fid.imag
    doc = {
        "format": SPECTRUM_FORMAT,
        "acquisition": spectrum.acq.to_dict(),
        "meta": meta or {},
        "fid": samples.tolist(),
    }
    return json.dumps(doc)
