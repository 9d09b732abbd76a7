"""Core domain types: acquisitions, spectra, basis sets, fit results."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError

GROUP_LABELS = ("healthy", "patient", "unlabeled")


@dataclass(frozen=True)
class AcquisitionParams:
    """Acquisition parameters attached to every spectrum.

    spectral_width is in Hz, transmitter_freq in MHz, echo/repetition times
    in ms, field_strength in Tesla.
    """

    spectral_width: float
    num_points: int
    transmitter_freq: float
    echo_time: float = 35.0
    repetition_time: float = 2000.0
    field_strength: float = 3.0
    vendor: str = "unknown"
    sequence: str = "PRESS"

    def __post_init__(self):
        if self.spectral_width <= 0:
            raise ValidationError("spectral_width must be > 0")
        if self.num_points < 2:
            raise ValidationError("num_points must be >= 2")
        if self.transmitter_freq <= 0:
            raise ValidationError("transmitter_freq must be > 0")

    @property
    def dwell_time(self) -> float:
        """Sampling interval in seconds."""
        return 1.0 / self.spectral_width

    def to_dict(self) -> dict:
        return {
            "spectral_width": self.spectral_width,
            "num_points": self.num_points,
            "transmitter_freq": self.transmitter_freq,
            "echo_time": self.echo_time,
            "repetition_time": self.repetition_time,
            "field_strength": self.field_strength,
            "vendor": self.vendor,
            "sequence": self.sequence,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AcquisitionParams":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def default_acquisition(num_points: int = 2048) -> AcquisitionParams:
    """Fallback acquisition for files that carry no parameters of their own.

    3 T PRESS at 2000 Hz spectral width, the platform's reference protocol.
    """
    return AcquisitionParams(
        spectral_width=2000.0,
        num_points=num_points,
        transmitter_freq=127.732,
    )


@dataclass(frozen=True)
class SubjectMeta:
    """Anonymized subject metadata. Only these fields survive ingest."""

    opaque_id: str
    group_label: str = "unlabeled"
    age: float | None = None
    sex: str | None = None

    def __post_init__(self):
        if self.group_label not in GROUP_LABELS:
            raise ValidationError(
                f"group_label must be one of {GROUP_LABELS}, got {self.group_label!r}"
            )

    def to_dict(self) -> dict:
        return {
            "opaque_id": self.opaque_id,
            "group_label": self.group_label,
            "age": self.age,
            "sex": self.sex,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SubjectMeta":
        return cls(
            opaque_id=d["opaque_id"],
            group_label=d.get("group_label", "unlabeled"),
            age=d.get("age"),
            sex=d.get("sex"),
        )


@dataclass
class Spectrum:
    """Complex time-domain FID with its acquisition parameters.

    Treated as immutable: operations return new Spectrum objects.
    """

    fid: np.ndarray
    acq: AcquisitionParams
    meta: SubjectMeta | None = None

    def __post_init__(self):
        self.fid = np.asarray(self.fid, dtype=complex)
        if self.fid.ndim != 1:
            raise ValidationError("fid must be one-dimensional")
        if len(self.fid) != self.acq.num_points:
            raise ValidationError(
                f"fid length {len(self.fid)} != acq.num_points {self.acq.num_points}"
            )
        if not np.all(np.isfinite(self.fid)):
            raise ValidationError("fid contains non-finite samples")

    def with_fid(self, fid: np.ndarray) -> "Spectrum":
        """Copy of this spectrum with a replacement FID of equal length."""
        return replace(self, fid=np.asarray(fid, dtype=complex))


@dataclass(frozen=True)
class AcqTags:
    """Subset of acquisition parameters used for basis auto-selection."""

    field_strength: float
    sequence: str
    echo_time: float

    def to_dict(self) -> dict:
        return {
            "field_strength": self.field_strength,
            "sequence": self.sequence,
            "echo_time": self.echo_time,
        }


@dataclass
class BasisEntry:
    name: str
    m: np.ndarray  # ideal time-domain signal, complex, length N

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=complex)


@dataclass
class BasisSet:
    """Per-metabolite ideal time-domain signals sharing one length."""

    entries: list[BasisEntry]
    acq_tags: AcqTags

    def __post_init__(self):
        if not self.entries:
            raise ValidationError("basis set must contain at least one entry")
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValidationError(f"duplicate metabolite names: {', '.join(dupes)}")
        n = len(self.entries[0].m)
        for e in self.entries:
            if len(e.m) != n:
                raise ValidationError(
                    f"entry {e.name!r} has length {len(e.m)}, expected {n}"
                )

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    @property
    def num_points(self) -> int:
        return len(self.entries[0].m)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, name: str) -> BasisEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)


@dataclass
class ImperfectionFactors:
    """Acquisition non-idealities: phases, line broadening, frequency drift.

    phi0 in radians, phi1 in rad/s (applied as a per-bin ramp), gamma in 1/s
    (one per metabolite, nonnegative), f in Hz (one per metabolite).
    """

    phi0: float
    phi1: float
    gamma: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        self.gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        self.f = np.atleast_1d(np.asarray(self.f, dtype=float))
        if np.any(self.gamma < 0):
            raise ValidationError("gamma must be nonnegative")
        if len(self.gamma) != len(self.f):
            raise ValidationError("gamma and f must have equal length")

    @classmethod
    def none(cls, n_metabolites: int) -> "ImperfectionFactors":
        """No imperfections: zero phases, broadening, and shifts."""
        return cls(0.0, 0.0, np.zeros(n_metabolites), np.zeros(n_metabolites))


@dataclass
class Baseline:
    """Frequency-domain background signal."""

    b: np.ndarray

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=complex)
        if not np.all(np.isfinite(self.b)):
            raise ValidationError("baseline contains non-finite samples")

    @classmethod
    def zero(cls, num_points: int) -> "Baseline":
        return cls(np.zeros(num_points, dtype=complex))


def _round6(x: float) -> float:
    return float(f"{x:.6g}")


@dataclass
class QuantResult:
    """Output of a quantifier: concentrations, uncertainties, and fit curves.

    All spectra (data, fitted, baseline, residual, per-metabolite components)
    are real parts over the fit window; ppm is the matching axis.
    conc and sd_percent are None for methods that report ratios only.
    """

    method: str
    dataset_id: str
    metabolites: list[str]
    ratio_to_tcr: dict[str, float]
    conc: dict[str, float] | None = None
    sd_percent: dict[str, float] | None = None
    ppm: np.ndarray = field(default_factory=lambda: np.zeros(0))
    data: np.ndarray = field(default_factory=lambda: np.zeros(0))
    fitted: np.ndarray = field(default_factory=lambda: np.zeros(0))
    baseline: np.ndarray = field(default_factory=lambda: np.zeros(0))
    residual: np.ndarray = field(default_factory=lambda: np.zeros(0))
    per_metabolite: dict[str, np.ndarray] = field(default_factory=dict)
    objective_trace: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.conc is not None:
            for name, c in self.conc.items():
                if c < 0:
                    raise ValidationError(f"negative concentration for {name}")
        if self.sd_percent is not None:
            self.sd_percent = {
                k: float(min(max(v, 0.0), 999.0)) for k, v in self.sd_percent.items()
            }

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "dataset_id": self.dataset_id,
            "metabolites": list(self.metabolites),
            "ratio_to_tcr": {k: _round6(v) for k, v in self.ratio_to_tcr.items()},
            "conc": None
            if self.conc is None
            else {k: _round6(v) for k, v in self.conc.items()},
            "sd_percent": None
            if self.sd_percent is None
            else {k: _round6(v) for k, v in self.sd_percent.items()},
            "ppm": [float(v) for v in self.ppm],
            "data": [float(v) for v in self.data],
            "fitted": [float(v) for v in self.fitted],
            "baseline": [float(v) for v in self.baseline],
            "residual": [float(v) for v in self.residual],
            "per_metabolite": {
                k: [float(x) for x in v] for k, v in self.per_metabolite.items()
            },
            "objective_trace": [float(v) for v in self.objective_trace],
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuantResult":
        return cls(
            method=d["method"],
            dataset_id=d["dataset_id"],
            metabolites=list(d["metabolites"]),
            ratio_to_tcr=dict(d["ratio_to_tcr"]),
            conc=None if d.get("conc") is None else dict(d["conc"]),
            sd_percent=None if d.get("sd_percent") is None else dict(d["sd_percent"]),
            ppm=np.asarray(d.get("ppm", []), dtype=float),
            data=np.asarray(d.get("data", []), dtype=float),
            fitted=np.asarray(d.get("fitted", []), dtype=float),
            baseline=np.asarray(d.get("baseline", []), dtype=float),
            residual=np.asarray(d.get("residual", []), dtype=float),
            per_metabolite={
                k: np.asarray(v, dtype=float)
                for k, v in d.get("per_metabolite", {}).items()
            },
            objective_trace=list(d.get("objective_trace", [])),
            warnings=list(d.get("warnings", [])),
        )
