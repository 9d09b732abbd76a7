"""Time-domain denoising via Hankel SVD rank truncation.

The denoiser is a pluggable engine behind a fixed interface; the default
engine embeds the FID in a Hankel matrix, truncates its SVD, and averages
anti-diagonals back to a signal. A passthrough engine returns the input
unchanged. Learned engines can be registered without API changes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import DecompositionError, ValidationError
from .types import Spectrum

DEFAULT_RANK = 25


@dataclass(frozen=True)
class DenoiseConfig:
    engine: str = "hsvd"
    rank: int = DEFAULT_RANK
    hankel_rows: int | None = None  # default N // 2

    def rows_for(self, n: int) -> int:
        rows = self.hankel_rows if self.hankel_rows is not None else n // 2
        if not 1 <= self.rank <= rows:
            raise ValidationError(
                f"rank must satisfy 1 <= rank <= hankel_rows ({self.rank} vs {rows})"
            )
        if rows >= n:
            raise ValidationError(f"hankel_rows must be < signal length ({rows} >= {n})")
        return rows


def _hankel(x: np.ndarray, rows: int) -> np.ndarray:
    cols = len(x) - rows + 1
    idx = np.arange(rows)[:, None] + np.arange(cols)[None, :]
    return x[idx]


def _average_antidiagonals(mat: np.ndarray, n: int) -> np.ndarray:
    rows, cols = mat.shape
    out = np.zeros(n, dtype=mat.dtype)
    counts = np.zeros(n)
    for r in range(rows):
        out[r : r + cols] += mat[r]
        counts[r : r + cols] += 1
    return out / counts


def _hsvd_truncate(fid: np.ndarray, cfg: DenoiseConfig) -> np.ndarray:
    rows = cfg.rows_for(len(fid))
    h = _hankel(fid, rows)
    u, s, vh = np.linalg.svd(h, full_matrices=False)
    k = min(cfg.rank, len(s))
    low_rank = (u[:, :k] * s[:k]) @ vh[:k]
    return _average_antidiagonals(low_rank, len(fid))


def denoise(spectrum: Spectrum, cfg: DenoiseConfig | None = None) -> Spectrum:
    """Denoised copy of the spectrum; length, dwell, and metadata preserved."""
    cfg = cfg or DenoiseConfig()
    if cfg.engine == "passthrough":
        return spectrum
    if cfg.engine != "hsvd":
        raise ValidationError(f"unknown denoise engine {cfg.engine!r}")
    if np.all(spectrum.fid == 0):
        return spectrum
    return spectrum.with_fid(_hsvd_truncate(spectrum.fid, cfg))


def hsvd_components(
    fid: np.ndarray, cfg: DenoiseConfig, dwell_time: float
) -> list[dict]:
    """Estimate exponential modes {frequency Hz, damping 1/s, amplitude}.

    Standard Hankel-SVD/state-space estimation: the truncated left singular
    basis gives the signal subspace, its shift-invariance the mode poles,
    and a Vandermonde least squares the complex amplitudes.
    """
    fid = np.asarray(fid, dtype=complex)
    if len(fid) < 4:
        raise ValidationError("need at least 4 samples")
    if np.all(fid == 0):
        raise DecompositionError("all-zero input has no exponential modes")
    rows = cfg.rows_for(len(fid))
    u, s, _ = np.linalg.svd(_hankel(fid, rows), full_matrices=False)
    k = min(cfg.rank, int(np.sum(s > s[0] * 1e-12)))
    uk = u[:, :k]
    # Shift invariance: rows 1..end vs rows 0..end-1 share the pole matrix.
    poles = np.linalg.eigvals(np.linalg.pinv(uk[:-1]) @ uk[1:])
    n = np.arange(len(fid))
    vander = np.power(poles[None, :], n[:, None])
    amps, *_ = np.linalg.lstsq(vander, fid, rcond=None)
    out = []
    for pole, amp in zip(poles, amps):
        modulus = abs(pole)
        if modulus == 0:
            continue
        out.append(
            {
                "frequency": float(np.angle(pole) / (2 * np.pi * dwell_time)),
                "damping": float(-np.log(modulus) / dwell_time),
                "amplitude": complex(amp),
            }
        )
    out.sort(key=lambda m: -abs(m["amplitude"]))
    return out


class HsvdDenoiser(TransformerMixin, BaseEstimator):
    """sklearn-style transformer over Spectrum objects (or lists of them).

    Stateless: fit is a no-op and transform applies rank-truncation
    denoising with the configured parameters.
    """

    def __init__(self, rank: int = DEFAULT_RANK, hankel_rows: int | None = None):
        self.rank = rank
        self.hankel_rows = hankel_rows

    def _config(self) -> DenoiseConfig:
        return DenoiseConfig(engine="hsvd", rank=self.rank, hankel_rows=self.hankel_rows)

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        if isinstance(X, Spectrum):
            return denoise(X, self._config())
        return [denoise(s, self._config()) for s in X]
