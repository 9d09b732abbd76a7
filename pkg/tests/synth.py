"""Synthetic acquisition, basis, and spectrum builders shared by the tests."""

from __future__ import annotations

import numpy as np

from mrskit import signal as sig
from mrskit.types import (
    AcqTags,
    AcquisitionParams,
    Baseline,
    BasisEntry,
    BasisSet,
    ImperfectionFactors,
    Spectrum,
    SubjectMeta,
)

DEFAULT_ACQ = AcquisitionParams(
    spectral_width=2000.0,
    num_points=2048,
    transmitter_freq=127.732,
    echo_time=35.0,
    repetition_time=2000.0,
    field_strength=3.0,
    vendor="synthetic",
    sequence="PRESS",
)

# Distinct multi-peak signatures: name -> [(ppm, relative amplitude), ...]
SIGNATURES = {
    "NAA": [(2.01, 1.0), (2.49, 0.22), (2.67, 0.14)],
    "Cr": [(3.03, 0.65), (3.91, 0.45)],
    "Cho": [(3.19, 0.9), (4.05, 0.18)],
    "Glu": [(2.11, 0.3), (2.35, 0.36), (3.75, 0.25)],
    "Ins": [(3.27, 0.2), (3.52, 0.4), (3.61, 0.44)],
    "GSH": [(2.95, 0.38), (4.1, 0.16)],
}

FIVE_MET = ("NAA", "Cr", "Cho", "Glu", "Ins")

# Typical synthetic truth used by recovery harnesses (arbitrary units).
TRUE_CONC = {"NAA": 12.0, "Cr": 8.0, "Cho": 3.0, "Glu": 9.0, "Ins": 5.0, "GSH": 2.5}
MAJOR_MET = ("NAA", "Cr", "Cho")


def lorentzian_fid(
    peaks, acq: AcquisitionParams = DEFAULT_ACQ, fwhm_hz: float = 2.0
) -> np.ndarray:
    """Sum of damped complex exponentials, one per (ppm, amplitude) peak."""
    t = np.arange(acq.num_points) * acq.dwell_time
    m = np.zeros(acq.num_points, dtype=complex)
    for ppm, amp in peaks:
        f_hz = (sig.WATER_PPM - ppm) * acq.transmitter_freq
        m += amp * np.exp((2j * np.pi * f_hz - np.pi * fwhm_hz) * t)
    return m


def make_basis(
    names=FIVE_MET, acq: AcquisitionParams = DEFAULT_ACQ, fwhm_hz: float = 2.0
) -> BasisSet:
    entries = [
        BasisEntry(name=n, m=lorentzian_fid(SIGNATURES[n], acq, fwhm_hz))
        for n in names
    ]
    tags = AcqTags(
        field_strength=acq.field_strength,
        sequence=acq.sequence,
        echo_time=acq.echo_time,
    )
    return BasisSet(entries=entries, acq_tags=tags)


def gaussian_bump(
    acq: AcquisitionParams = DEFAULT_ACQ,
    center_ppm: float = 2.2,
    width_ppm: float = 0.6,
    amplitude: float = 0.0,
) -> Baseline:
    """Smooth real baseline bump in the frequency domain."""
    ppm = sig.ppm_axis(acq)
    b = amplitude * np.exp(-0.5 * ((ppm - center_ppm) / width_ppm) ** 2)
    return Baseline(b.astype(complex))


def conc_vector(basis: BasisSet, conc: dict[str, float] | None = None) -> np.ndarray:
    conc = conc or TRUE_CONC
    return np.array([conc[n] for n in basis.names])


def make_spectrum(
    basis: BasisSet,
    conc=None,
    ifs: ImperfectionFactors | None = None,
    baseline: Baseline | None = None,
    raw_snr: float | None = None,
    rng: np.random.Generator | None = None,
    meta: SubjectMeta | None = None,
    acq: AcquisitionParams = DEFAULT_ACQ,
) -> Spectrum:
    """Forward-model a spectrum, optionally adding noise at a target raw SNR.

    raw SNR is peak real amplitude in the signal window over twice the
    per-bin real noise SD; complex white noise is added in the time
    domain, where the unitary transform keeps the same per-part SD.
    """
    c = conc_vector(basis, conc) if not isinstance(conc, np.ndarray) else conc
    ifs = ifs or ImperfectionFactors.none(len(basis))
    model = sig.forward_model(basis, c, ifs, baseline, acq)
    fid = sig.idft(model)
    if raw_snr is not None:
        rng = rng or np.random.default_rng(0)
        win = sig.ppm_window(acq, *sig.SIGNAL_WINDOW)
        peak = float(np.max(model.real[win]))
        sigma_t = peak / (2.0 * raw_snr)
        noise = sigma_t * (
            rng.standard_normal(acq.num_points)
            + 1j * rng.standard_normal(acq.num_points)
        )
        fid = fid + noise
    return Spectrum(fid=fid, acq=acq, meta=meta)
