"""Reader and writer for the .RAW text spectrum format.

A file is a ``$NMID`` header block of key=value pairs terminated by
``$END``, followed by whitespace-separated real/imaginary sample pairs.
Values are written in six-significant-figure scientific notation
(FMTDAT '(2E15.6)'), two per line.
"""

from __future__ import annotations

import re

import numpy as np

from ..errors import ParseError, SerializationError
from ..types import AcquisitionParams, Spectrum, default_acquisition

_KV_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*('[^']*'|\"[^\"]*\"|[^,\s]+)")


def _parse_header(lines: list[str], start: int) -> tuple[dict, int]:
    header: dict[str, str] = {}
    for i in range(start + 1, len(lines)):
        stripped = lines[i].strip()
        if stripped.upper().startswith("$END"):
            return header, i + 1
        for key, value in _KV_RE.findall(stripped):
            header[key.lower()] = value.strip("'\"").strip()
    raise ParseError("$NMID block is not terminated by $END", line=start + 1)


def parse_raw(text: str | bytes, acq: AcquisitionParams | None = None) -> Spectrum:
    """Parse a .RAW document into a Spectrum.

    Acquisition parameters come from the header (hzpppm/deltat) when
    present, from ``acq`` otherwise, falling back to the platform default
    protocol.
    """
    if isinstance(text, bytes):
        text = text.decode("ascii", errors="replace")
    lines = text.splitlines()

    nmid_line = None
    for i, line in enumerate(lines):
        if line.strip().upper().startswith("$NMID"):
            nmid_line = i
            break
    if nmid_line is None:
        raise ParseError("missing $NMID header block")
    header, data_start = _parse_header(lines, nmid_line)

    values: list[float] = []
    for i in range(data_start, len(lines)):
        for token in lines[i].split():
            try:
                values.append(float(token.replace("D", "E").replace("d", "e")))
            except ValueError:
                raise ParseError(f"non-numeric token {token!r}", line=i + 1) from None
    if not values:
        raise ParseError("no data points after $END", line=data_start)
    if len(values) % 2 != 0:
        raise ParseError(
            f"odd number of numeric tokens ({len(values)}); "
            "expected real/imaginary pairs"
        )

    arr = np.asarray(values, dtype=float).reshape(-1, 2)
    fid = arr[:, 0] + 1j * arr[:, 1]

    base = acq if acq is not None else default_acquisition(len(fid))
    fields = base.to_dict()
    fields["num_points"] = len(fid)
    if "deltat" in header:
        fields["spectral_width"] = 1.0 / float(header["deltat"])
    if "hzpppm" in header:
        fields["transmitter_freq"] = float(header["hzpppm"])
    return Spectrum(fid=fid, acq=AcquisitionParams(**fields))


def write_raw(
    spectrum: Spectrum, id: str, include_acquisition: bool = False
) -> str:
    """Serialize a spectrum to .RAW text.

    Emits the minimal header {ID, FMTDAT, VOLUME, TRAMP}; with
    ``include_acquisition`` the hzpppm/deltat fields are added so the file
    is self-describing.
    """
    fid = spectrum.fid
    if fid.size == 0:
        raise SerializationError("cannot write an empty FID")
    if not np.all(np.isfinite(fid)):
        raise SerializationError("FID contains non-finite samples")

    out = [" $NMID", f" ID='{id}', FMTDAT='(2E15.6)'", " VOLUME=1.0", " TRAMP=1.0"]
    if include_acquisition:
        out.append(f" HZPPPM={spectrum.acq.transmitter_freq:.5E}")
        out.append(f" DELTAT={spectrum.acq.dwell_time:.5E}")
    out.append(" $END")
    for v in fid:
        out.append(f" {v.real:15.5E} {v.imag:15.5E}")
    return "\n".join(out) + "\n"
