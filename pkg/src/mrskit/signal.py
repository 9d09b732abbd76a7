"""Signal model and transforms: DFT, ppm axis, imperfections, SNR.

Convention: the forward transform is an orthonormal DFT followed by
fftshift, so index 0 is the most negative frequency and index N//2 the
carrier. Parseval holds symmetrically under this normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, ValidationError
from .types import AcquisitionParams, Baseline, BasisSet, ImperfectionFactors, Spectrum

WATER_PPM = 4.7
SIGNAL_WINDOW = (1.8, 4.0)
NOISE_WINDOW = (-2.0, -0.5)


def dft(fid: np.ndarray) -> np.ndarray:
    """Orthonormal forward DFT with fftshift (time -> frequency)."""
    fid = np.asarray(fid)
    if fid.size == 0:
        raise ValidationError("dft: empty input")
    if not np.all(np.isfinite(fid)):
        raise ValidationError("dft: non-finite input")
    return np.fft.fftshift(np.fft.fft(fid, norm="ortho"))


def idft(spectrum: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dft` (frequency -> time)."""
    spectrum = np.asarray(spectrum)
    if spectrum.size == 0:
        raise ValidationError("idft: empty input")
    return np.fft.ifft(np.fft.ifftshift(spectrum), norm="ortho")


def freq_axis(acq: AcquisitionParams) -> np.ndarray:
    """Frequency offset of each bin from the carrier, in Hz, ascending."""
    return np.fft.fftshift(np.fft.fftfreq(acq.num_points, d=acq.dwell_time))


def ppm_axis(acq: AcquisitionParams, reference_ppm: float = WATER_PPM) -> np.ndarray:
    """Chemical-shift axis, monotone decreasing, carrier bin at reference_ppm."""
    if acq.transmitter_freq <= 0:
        raise ValidationError("transmitter_freq must be > 0")
    # 1 ppm corresponds to transmitter_freq Hz (MHz carrier).
    return reference_ppm - freq_axis(acq) / acq.transmitter_freq


def ppm_window(
    acq: AcquisitionParams,
    lo: float,
    hi: float,
    reference_ppm: float = WATER_PPM,
) -> np.ndarray:
    """Indices of bins whose ppm value lies in [lo, hi]."""
    if lo >= hi:
        raise ValidationError("window lower bound must be below upper bound")
    ppm = ppm_axis(acq, reference_ppm)
    if lo < ppm.min() or hi > ppm.max():
        raise ValidationError(
            f"window [{lo}, {hi}] ppm outside axis range "
            f"[{ppm.min():.2f}, {ppm.max():.2f}]"
        )
    return np.nonzero((ppm >= lo) & (ppm <= hi))[0]


def _damped(m: np.ndarray, gamma: float, f_hz: float, acq: AcquisitionParams):
    n_dt = np.arange(len(m)) * acq.dwell_time
    return m * np.exp(-(gamma + 2j * np.pi * f_hz) * n_dt)


def apply_imperfections(
    m: np.ndarray, gamma: float, f: float, acq: AcquisitionParams
) -> np.ndarray:
    """Frequency-domain metabolite signal under line broadening and drift.

    Returns the DFT of m(t) * exp(-(gamma + i*2*pi*f) * t). Pure damping
    broadens each Lorentzian line by gamma/pi Hz FWHM; pure f shifts all
    peaks by f Hz.
    """
    if gamma < 0:
        raise ValidationError("gamma must be nonnegative")
    m = np.asarray(m, dtype=complex)
    if gamma == 0.0 and f == 0.0:
        return dft(m)
    return dft(_damped(m, gamma, f, acq))


def _phase_ramp(acq: AcquisitionParams, phi0: float, phi1: float) -> np.ndarray:
    # One ramp step per frequency bin, proportional to offset from the carrier.
    n = acq.num_points
    tau = (np.arange(n) - n // 2) * acq.dwell_time
    return np.exp(-1j * (phi0 + tau * phi1))


def forward_model(
    basis: BasisSet,
    conc: np.ndarray,
    ifs: ImperfectionFactors,
    baseline: Baseline | None,
    acq: AcquisitionParams,
) -> np.ndarray:
    """Noiseless frequency-domain model: phased baseline plus weighted basis.

    exp[-i(phi0 + tau*phi1)] * (B + sum_l C_l * M_l(gamma_l, f_l)), with the
    phase ramp over frequency bins. Callers add noise.
    """
    conc = np.asarray(conc, dtype=float)
    if len(conc) != len(basis):
        raise ValidationError(
            f"conc length {len(conc)} != basis size {len(basis)}"
        )
    if len(ifs.gamma) != len(basis):
        raise ValidationError("imperfection arrays must match basis size")
    if np.any(conc < 0):
        raise ValidationError("concentrations must be nonnegative")
    if basis.num_points != acq.num_points:
        raise ValidationError("basis length does not match acquisition")

    total = np.zeros(acq.num_points, dtype=complex)
    for c, entry, g, f in zip(conc, basis.entries, ifs.gamma, ifs.f):
        if c != 0.0:
            total += c * apply_imperfections(entry.m, g, f, acq)
    if baseline is not None:
        if len(baseline.b) != acq.num_points:
            raise ValidationError("baseline length does not match acquisition")
        total = total + baseline.b
    return _phase_ramp(acq, ifs.phi0, ifs.phi1) * total


def forward_model_jacobian(
    basis: BasisSet,
    conc: np.ndarray,
    ifs: ImperfectionFactors,
    baseline: Baseline | None,
    acq: AcquisitionParams,
) -> dict:
    """Analytic derivatives of :func:`forward_model` w.r.t. its parameters.

    Returns complex arrays: 'phi0' and 'phi1' of shape (N,), 'conc',
    'gamma', and 'f' of shape (L, N).
    """
    conc = np.asarray(conc, dtype=float)
    if len(conc) != len(basis) or len(ifs.gamma) != len(basis):
        raise ValidationError("dimension mismatch")
    n = acq.num_points
    n_dt = np.arange(n) * acq.dwell_time
    ph = _phase_ramp(acq, ifs.phi0, ifs.phi1)
    tau = (np.arange(n) - n // 2) * acq.dwell_time

    d_conc = np.zeros((len(basis), n), dtype=complex)
    d_gamma = np.zeros((len(basis), n), dtype=complex)
    d_f = np.zeros((len(basis), n), dtype=complex)
    total = np.zeros(n, dtype=complex)
    for l, (entry, g, f) in enumerate(zip(basis.entries, ifs.gamma, ifs.f)):
        damped = _damped(entry.m, g, f, acq)
        m_freq = dft(damped)
        total += conc[l] * m_freq
        d_conc[l] = ph * m_freq
        d_gamma[l] = ph * conc[l] * dft(-n_dt * damped)
        d_f[l] = ph * conc[l] * dft(-2j * np.pi * n_dt * damped)
    if baseline is not None:
        total = total + baseline.b
    return {
        "phi0": -1j * ph * total,
        "phi1": -1j * tau * ph * total,
        "conc": d_conc,
        "gamma": d_gamma,
        "f": d_f,
    }


@dataclass(frozen=True)
class SnrEstimate:
    """Raw peak-over-2*noise-SD ratio plus the rounded display value."""

    raw: float
    display: int


def noise_sigma(
    spectrum: Spectrum,
    window: tuple[float, float] = NOISE_WINDOW,
    reference_ppm: float = WATER_PPM,
) -> float:
    """Standard deviation of the real part in the signal-free ppm window."""
    idx = ppm_window(spectrum.acq, window[0], window[1], reference_ppm)
    return float(np.std(dft(spectrum.fid).real[idx]))


def snr_estimate(
    spectrum: Spectrum,
    signal_window: tuple[float, float] = SIGNAL_WINDOW,
    noise_window: tuple[float, float] = NOISE_WINDOW,
    reference_ppm: float = WATER_PPM,
) -> SnrEstimate:
    """SNR of the real-part spectrum: window peak over twice the noise SD.

    The display value is the conventional rounded integer (peak over one
    noise SD); raw is peak / (2 * SD).
    """
    spec_real = dft(spectrum.fid).real
    sig_idx = ppm_window(spectrum.acq, *signal_window, reference_ppm=reference_ppm)
    noise_idx = ppm_window(spectrum.acq, *noise_window, reference_ppm=reference_ppm)
    peak = float(np.max(spec_real[sig_idx]))
    sd = float(np.std(spec_real[noise_idx]))
    if sd == 0.0:
        raise DegenerateDataError("noise window has zero variance")
    raw = peak / (2.0 * sd)
    return SnrEstimate(raw=raw, display=int(round(2.0 * raw)))
