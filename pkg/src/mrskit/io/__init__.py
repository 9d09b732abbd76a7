"""File formats: .RAW spectra, native JSON schemas, anonymization, exports."""

from .anonymize import anonymize
from .basis import parse_basis, select_basis, write_basis
from .export import export_results, export_table
from .native import parse_spectrum_json, sniff_format, write_spectrum_json
from .raw import parse_raw, write_raw

__all__ = [
    "anonymize",
    "export_results",
    "export_table",
    "parse_basis",
    "parse_raw",
    "parse_spectrum_json",
    "select_basis",
    "sniff_format",
    "write_basis",
    "write_raw",
    "write_spectrum_json",
]
