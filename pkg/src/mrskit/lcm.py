"""Linear-combination model fitting with regularization and priors.

The frequency-domain model is a phased sum of a cubic-spline baseline and
lineshape-convolved, imperfection-disturbed basis spectra. The objective
is the real-part squared misfit weighted by the noise variance, plus
smoothness penalties on the lineshape and baseline coefficients and
Gaussian priors on line broadening and frequency shifts.

Optimization is separable: an outer damped Levenberg-Marquardt loop over
the nonlinear parameters (phases, per-metabolite broadening and shift,
lineshape), with a bounded linear least-squares solve for concentrations
(nonnegative) and baseline coefficients at every trial point. Steps are
accepted only when the full objective decreases, so the trace is monotone.
The data is normalized to unit noise internally, which makes the fit
exactly equivariant to rescaling of the input FID.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline
from scipy.optimize import lsq_linear
from sklearn.base import BaseEstimator

from . import signal as sig
from .errors import (
    DegenerateDataError,
    DegeneracyWarning,
    FitConvergenceWarning,
    ValidationError,
)
from .types import AcquisitionParams, BasisSet, QuantResult, Spectrum

TCR_MEMBERS = ("Cr", "PCr")

COLLINEARITY_LIMIT = 0.999


def second_difference(n: int) -> np.ndarray:
    """(n-2) x n second-difference matrix used as a smoothness regularizer."""
    if n < 3:
        raise ValidationError("second difference needs at least 3 coefficients")
    d = np.zeros((n - 2, n))
    for i in range(n - 2):
        d[i, i : i + 3] = (1.0, -2.0, 1.0)
    return d


@dataclass(frozen=True)
class Lineshape:
    """Symmetric frequency-bin convolution kernel; coefficients sum to 1."""

    s: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "s", np.asarray(self.s, dtype=float))
        if self.s.ndim != 1 or len(self.s) % 2 == 0:
            raise ValidationError("lineshape must be a 1-d odd-length array")
        if abs(self.s.sum() - 1.0) > 1e-6:
            raise ValidationError("lineshape coefficients must sum to 1")

    @property
    def half_width(self) -> int:
        return (len(self.s) - 1) // 2

    @classmethod
    def unit(cls, half_width: int = 4) -> "Lineshape":
        s = np.zeros(2 * half_width + 1)
        s[half_width] = 1.0
        return cls(s)


def lineshape_convolve(model_spectrum: np.ndarray, lineshape: Lineshape) -> np.ndarray:
    """Convolve a frequency-domain spectrum with the lineshape kernel.

    The kernel index runs -half_width..half_width over frequency bins;
    edges are zero-padded.
    """
    model_spectrum = np.asarray(model_spectrum)
    if len(lineshape.s) > len(model_spectrum):
        raise ValidationError("lineshape kernel wider than the spectrum")
    return np.convolve(model_spectrum, lineshape.s, mode="same")


def spline_design(
    window: tuple[float, float],
    knot_spacing: float,
    acq: AcquisitionParams,
    reference_ppm: float = sig.WATER_PPM,
) -> np.ndarray:
    """Cubic B-spline design matrix over the window's frequency bins.

    Knots are uniform over the window with clamped ends, giving
    intervals + 3 basis functions; rows sum to 1 (partition of unity).
    Rows follow bin order (ppm decreasing).
    """
    lo, hi = window
    if hi - lo < 4 * knot_spacing:
        raise ValidationError("window must span at least 4 knot spacings")
    idx = sig.ppm_window(acq, lo, hi, reference_ppm)
    if len(idx) < 2:
        raise ValidationError("window covers fewer than 2 frequency bins")
    ppm = sig.ppm_axis(acq, reference_ppm)[idx]
    intervals = int(round((hi - lo) / knot_spacing))
    knots = np.linspace(lo, hi, intervals + 1)
    t = np.concatenate([[lo] * 3, knots, [hi] * 3])
    dm = BSpline.design_matrix(ppm[::-1], t, 3).toarray()
    return dm[::-1]


@dataclass(frozen=True)
class FitConfig:
    """Fit window, regularization weights, priors, bounds, and stopping.

    Regularization weights apply to noise-normalized data (the fit scales
    the spectrum to unit noise SD before solving).
    """

    window: tuple[float, float] = (0.2, 4.2)
    knot_spacing: float = 0.4
    lineshape_half_width: int = 4
    alpha_s: float = 1.0
    alpha_b: float = 1.0
    gamma_prior: float = 2.0
    gamma_sigma: float = 2.0
    f_sigma: float = 3.0
    phi0_bounds: tuple[float, float] = (-np.pi / 2, np.pi / 2)
    phi1_bounds: tuple[float, float] = (-2.0, 2.0)
    gamma_bounds: tuple[float, float] = (0.0, 20.0)
    f_bounds: tuple[float, float] = (-10.0, 10.0)
    max_outer_iters: int = 100
    tol: float = 1e-8
    reference_ppm: float = sig.WATER_PPM
    noise_window: tuple[float, float] = (-2.0, -0.5)

    def __post_init__(self):
        if self.gamma_sigma <= 0 or self.f_sigma <= 0:
            raise ValidationError("prior widths must be positive")
        if self.alpha_s < 0 or self.alpha_b < 0:
            raise ValidationError("regularization weights must be nonnegative")
        if self.lineshape_half_width < 1:
            raise ValidationError("lineshape_half_width must be >= 1")


@dataclass
class FitParams:
    """One point in the fit's parameter space."""

    phi0: float
    phi1: float
    gamma: np.ndarray
    f: np.ndarray
    lineshape: Lineshape
    c: np.ndarray
    h: np.ndarray


def _shift_bins(arr: np.ndarray, s: int) -> np.ndarray:
    """arr shifted by s bins (out[k] = arr[k-s]) with zero padding."""
    out = np.roll(arr, s)
    if s > 0:
        out[:s] = 0
    elif s < 0:
        out[s:] = 0
    return out


class _Problem:
    """Precomputed quantities shared by the objective, fit, and Jacobians."""

    def __init__(self, spectrum: Spectrum, basis: BasisSet, cfg: FitConfig):
        if basis.num_points != spectrum.acq.num_points:
            raise ValidationError("basis length does not match spectrum")
        self.cfg = cfg
        self.acq = spectrum.acq
        self.n_met = len(basis)
        self.names = basis.names
        self.basis_fids = np.stack([e.m for e in basis.entries])
        n = self.acq.num_points
        self.n_dt = np.arange(n) * self.acq.dwell_time
        self.tau = (np.arange(n) - n // 2) * self.acq.dwell_time
        self.idx = sig.ppm_window(
            self.acq, cfg.window[0], cfg.window[1], cfg.reference_ppm
        )
        self.spline = spline_design(
            cfg.window, cfg.knot_spacing, self.acq, cfg.reference_ppm
        )
        self.n_spline = self.spline.shape[1]
        self.r_b = second_difference(self.n_spline)
        self.ks = 2 * cfg.lineshape_half_width + 1
        self.r_s = second_difference(self.ks)
        self.y_full = sig.dft(spectrum.fid)
        self.y = self.y_full.real[self.idx]

    def metabolite_spectra(self, gamma: np.ndarray, f: np.ndarray):
        """Damped time-domain entries and their frequency-domain transforms."""
        decay = np.exp(
            -(gamma[:, None] + 2j * np.pi * f[:, None]) * self.n_dt[None, :]
        )
        damped = self.basis_fids * decay
        freq = np.fft.fftshift(np.fft.fft(damped, axis=1, norm="ortho"), axes=1)
        return damped, freq

    def phase(self, phi0: float, phi1: float) -> np.ndarray:
        return np.exp(-1j * (phi0 + self.tau * phi1))

    def model_pieces(self, phi0, phi1, gamma, f, shape: Lineshape):
        """Phased complex metabolite columns and real spline columns on the window."""
        _, freq = self.metabolite_spectra(gamma, f)
        conv = np.stack(
            [lineshape_convolve(freq[l], shape) for l in range(self.n_met)]
        )
        ph = self.phase(phi0, phi1)
        met_cols = (ph[None, :] * conv)[:, self.idx]
        spl_cols = ph[self.idx].real[:, None] * self.spline
        return met_cols, spl_cols, conv, ph

    def model_real(self, params: FitParams) -> np.ndarray:
        met_cols, spl_cols, _, _ = self.model_pieces(
            params.phi0, params.phi1, params.gamma, params.f, params.lineshape
        )
        return params.c @ met_cols.real + spl_cols @ params.h


def objective(
    params: FitParams,
    spectrum: Spectrum,
    basis: BasisSet,
    cfg: FitConfig | None = None,
    noise_sd: float | None = None,
) -> float:
    """Full fit objective at the given parameter point.

    Real-part squared misfit over the window scaled by the noise variance,
    plus lineshape and baseline smoothness penalties and Gaussian priors
    on per-metabolite broadening and shift.
    """
    cfg = cfg or FitConfig()
    prob = _Problem(spectrum, basis, cfg)
    if len(params.c) != prob.n_met or len(params.gamma) != prob.n_met:
        raise ValidationError("parameter dimensions do not match the basis")
    if len(params.h) != prob.n_spline:
        raise ValidationError(
            f"baseline has {len(params.h)} coefficients, design needs {prob.n_spline}"
        )
    if noise_sd is None:
        noise_sd = sig.noise_sigma(spectrum, cfg.noise_window, cfg.reference_ppm)
    if noise_sd == 0.0:
        noise_sd = 1.0  # weight is irrelevant for an exact fit
    resid = prob.y - prob.model_real(params)
    data_term = float(resid @ resid) / noise_sd**2
    pen_s = cfg.alpha_s**2 * float(np.sum((prob.r_s @ params.lineshape.s) ** 2))
    pen_b = cfg.alpha_b**2 * float(np.sum((prob.r_b @ params.h) ** 2))
    priors = float(
        np.sum((params.gamma - cfg.gamma_prior) ** 2) / cfg.gamma_sigma**2
        + np.sum(params.f**2) / cfg.f_sigma**2
    )
    return data_term + pen_s + pen_b + priors


@dataclass
class FitState:
    """Converged-fit summary consumed by the uncertainty estimate.

    jacobian holds d(model real part)/d(parameter) over the window bins;
    conc_cols marks which columns are concentrations.
    """

    metabolites: list[str]
    conc: np.ndarray
    jacobian: np.ndarray
    conc_cols: np.ndarray


def crlb_percent(state: FitState, noise_sigma: float) -> dict[str, float]:
    """Relative Cramer-Rao bounds: 100 * sqrt([F^-1]_ll) / C_l, in percent.

    F is the Fisher information of the real-part model with the given
    noise SD. Values are clamped to [0, 999]; a singular information
    matrix yields 999 for the affected metabolites plus a
    DegeneracyWarning. Below 20 is conventionally displayed as acceptable.
    """
    out: dict[str, float] = {}
    if noise_sigma == 0.0:
        for name, c in zip(state.metabolites, state.conc):
            out[name] = 0.0 if c > 0 else 999.0
        return out
    fisher = (state.jacobian.T @ state.jacobian) / noise_sigma**2
    degenerate = False
    try:
        cov = np.linalg.inv(fisher)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(fisher)
        degenerate = True
    variances = np.diag(cov)[state.conc_cols]
    for name, c, var in zip(state.metabolites, state.conc, variances):
        if not np.isfinite(var) or var < 0 or c <= 0:
            out[name] = 999.0
            degenerate = degenerate or not np.isfinite(var) or var < 0
        else:
            out[name] = float(min(100.0 * np.sqrt(var) / c, 999.0))
    if degenerate:
        warnings.warn(
            "singular Fisher information; affected %SD values set to 999",
            DegeneracyWarning,
        )
    return out


class _Fitter:
    """Separable bounded minimization of the fit objective."""

    def __init__(self, spectrum: Spectrum, basis: BasisSet, cfg: FitConfig):
        if not np.any(spectrum.fid):
            raise DegenerateDataError("all-zero spectrum cannot be quantified")
        self.prob = _Problem(spectrum, basis, cfg)
        self.cfg = cfg
        self.sigma_est = sig.noise_sigma(spectrum, cfg.noise_window, cfg.reference_ppm)
        # Noise floor guard keeps noiseless synthetics finite.
        self.sigma_eff = max(self.sigma_est, 1e-6 * float(np.max(np.abs(self.prob.y))))
        self.y = self.prob.y / self.sigma_eff
        L, ks = self.prob.n_met, self.prob.ks
        self.n_theta = 2 + 2 * L + ks
        self.lo = np.concatenate(
            [
                [cfg.phi0_bounds[0], cfg.phi1_bounds[0]],
                np.full(L, cfg.gamma_bounds[0]),
                np.full(L, cfg.f_bounds[0]),
                np.zeros(ks),
            ]
        )
        self.hi = np.concatenate(
            [
                [cfg.phi0_bounds[1], cfg.phi1_bounds[1]],
                np.full(L, cfg.gamma_bounds[1]),
                np.full(L, cfg.f_bounds[1]),
                np.ones(ks),
            ]
        )

    def theta0(self) -> np.ndarray:
        L, ks = self.prob.n_met, self.prob.ks
        u = np.zeros(ks)
        u[ks // 2] = 1.0
        gamma0 = float(
            np.clip(self.cfg.gamma_prior, *self.cfg.gamma_bounds)
        )
        return np.concatenate([[0.0, 0.0], np.full(L, gamma0), np.zeros(L), u])

    def unpack(self, theta: np.ndarray):
        L, ks = self.prob.n_met, self.prob.ks
        phi0, phi1 = float(theta[0]), float(theta[1])
        gamma = theta[2 : 2 + L]
        f = theta[2 + L : 2 + 2 * L]
        u = theta[2 + 2 * L :].copy()
        if u.sum() <= 1e-12:
            u = np.zeros(ks)
            u[ks // 2] = 1.0
        return phi0, phi1, gamma, f, u

    def project(self, theta: np.ndarray) -> np.ndarray:
        out = np.clip(theta, self.lo, self.hi)
        # Canonicalize the lineshape gauge (S is invariant to u's scale).
        u = out[2 + 2 * self.prob.n_met :]
        total = u.sum()
        if total > 1e-12:
            out[2 + 2 * self.prob.n_met :] = u / total
        return out

    def _pieces(self, theta):
        phi0, phi1, gamma, f, u = self.unpack(theta)
        shape = Lineshape(u / u.sum())
        met_cols, spl_cols, conv, ph = self.prob.model_pieces(
            phi0, phi1, gamma, f, shape
        )
        a = np.hstack([met_cols.real.T, spl_cols])
        return a, {
            "phi0": phi0,
            "phi1": phi1,
            "gamma": gamma,
            "f": f,
            "u": u,
            "s": shape.s,
            "conv": conv,
            "ph": ph,
            "met_cols": met_cols,
        }

    def _augmented(self, a):
        """Design with baseline-smoothness rows appended."""
        L, nb = self.prob.n_met, self.prob.n_spline
        if self.cfg.alpha_b > 0:
            pen = np.hstack([np.zeros((nb - 2, L)), self.cfg.alpha_b * self.prob.r_b])
            return np.vstack([a, pen]), np.concatenate([self.y, np.zeros(nb - 2)])
        return a, self.y

    def inner_solve(self, theta):
        """Bounded linear solve for (C >= 0, H free) at fixed theta."""
        a, cache = self._pieces(theta)
        L, nb = self.prob.n_met, self.prob.n_spline
        aug, rhs = self._augmented(a)
        lb = np.concatenate([np.zeros(L), np.full(nb, -np.inf)])
        ub = np.full(L + nb, np.inf)
        res = lsq_linear(aug, rhs, bounds=(lb, ub), method="bvls", tol=1e-12)
        return res.x[:L], res.x[L:], a, cache

    def objective_value(self, theta, c, h, a) -> float:
        _, _, gamma, f, u = self.unpack(theta)
        s = u / u.sum()
        resid = self.y - a @ np.concatenate([c, h])
        return float(
            resid @ resid
            + self.cfg.alpha_s**2 * np.sum((self.prob.r_s @ s) ** 2)
            + self.cfg.alpha_b**2 * np.sum((self.prob.r_b @ h) ** 2)
            + np.sum((gamma - self.cfg.gamma_prior) ** 2) / self.cfg.gamma_sigma**2
            + np.sum(f**2) / self.cfg.f_sigma**2
        )

    def residual_jacobian(self, theta, c, h, a, cache):
        """Stacked residual vector and analytic Jacobian w.r.t. theta.

        Rows: data misfit, weighted lineshape smoothness, gamma priors,
        f priors. Returns (residual, jacobian, data-block model Jacobian).
        """
        prob, cfg = self.prob, self.cfg
        L, ks, idx = prob.n_met, prob.ks, prob.idx
        phi0, phi1, gamma, f, u = self.unpack(theta)
        total = u.sum()
        s = u / total
        shape = Lineshape(s)
        ph, conv = cache["ph"], cache["conv"]

        dmodel = np.zeros((len(idx), self.n_theta))
        met_full = c @ conv  # complex, full axis, lineshape-convolved
        met_win = (ph * met_full)[idx]
        spl_amp = prob.spline @ h
        phase_sens = met_win.imag + ph[idx].imag * spl_amp
        dmodel[:, 0] = phase_sens
        dmodel[:, 1] = prob.tau[idx] * phase_sens

        damped, freq = prob.metabolite_spectra(gamma, f)
        for l in range(L):
            t_l = sig.dft(prob.n_dt * damped[l])
            conv_t = lineshape_convolve(t_l, shape)
            dmodel[:, 2 + l] = -c[l] * (ph * conv_t)[idx].real
            dmodel[:, 2 + L + l] = -c[l] * (2j * np.pi * ph * conv_t)[idx].real

        # Lineshape block. With U = sum_l c_l M_l (pre-convolution) the
        # derivative w.r.t. kernel tap S_j is Re{ph * shift_j(U)}; chain
        # through the simplex normalization S = u / sum(u).
        u_block = slice(2 + 2 * L, self.n_theta)
        pre = c @ freq
        d_s = np.empty((ks, len(idx)))
        for j in range(ks):
            shifted = _shift_bins(pre, j - cfg.lineshape_half_width)
            d_s[j] = (ph * shifted)[idx].real
        met_model = met_win.real
        dmodel[:, u_block] = ((d_s - met_model[None, :]) / total).T

        model = a @ np.concatenate([c, h])
        r_data = self.y - model
        r_ls = cfg.alpha_s * (prob.r_s @ s)
        r_gamma = (gamma - cfg.gamma_prior) / cfg.gamma_sigma
        r_f = f / cfg.f_sigma

        n_ls = prob.r_s.shape[0]
        jac = np.zeros((len(idx) + n_ls + 2 * L, self.n_theta))
        jac[: len(idx)] = -dmodel
        rs_s = prob.r_s @ s
        for j in range(ks):
            jac[len(idx) : len(idx) + n_ls, 2 + 2 * L + j] = (
                cfg.alpha_s * (prob.r_s[:, j] - rs_s) / total
            )
        rows_g = len(idx) + n_ls
        for l in range(L):
            jac[rows_g + l, 2 + l] = 1.0 / cfg.gamma_sigma
            jac[rows_g + L + l, 2 + L + l] = 1.0 / cfg.f_sigma

        residual = np.concatenate([r_data, r_ls, r_gamma, r_f])
        return residual, jac, dmodel

    def lm_system(self, theta, c, h, a, cache):
        """Projected residual/Jacobian for the outer step.

        Applies the variable-projection (Kaufman) correction: the data and
        baseline-penalty rows are projected onto the orthogonal complement
        of the free linear columns, accounting for how (C, H) re-solve as
        theta moves. Concentrations pinned at zero stay pinned.
        """
        prob = self.prob
        idx = prob.idx
        residual_plain, jac_plain, dmodel = self.residual_jacobian(
            theta, c, h, a, cache
        )
        aug, rhs = self._augmented(a)
        r_aug = rhs - aug @ np.concatenate([c, h])
        n_pen = aug.shape[0] - len(idx)
        d = np.vstack([dmodel, np.zeros((n_pen, self.n_theta))])
        free = np.concatenate([c > 0, np.ones(prob.n_spline, dtype=bool)])
        a_free = aug[:, free]
        z, *_ = np.linalg.lstsq(a_free, d, rcond=None)
        d_perp = d - a_free @ z
        r = np.concatenate([r_aug, residual_plain[len(idx) :]])
        jac = np.vstack([-d_perp, jac_plain[len(idx) :]])
        return r, jac

    def run(self):
        cfg = self.cfg
        theta = self.theta0()
        c, h, a, cache = self.inner_solve(theta)
        j_val = self.objective_value(theta, c, h, a)
        trace = [j_val]
        lam = 1e-3
        converged = False
        for _ in range(cfg.max_outer_iters):
            r, jac = self.lm_system(theta, c, h, a, cache)
            jtj = jac.T @ jac
            g = jac.T @ r
            ridge = 1e-12 * (np.trace(jtj) / self.n_theta + 1.0)
            improved = False
            rel_drop = 0.0
            for _trial in range(12):
                m = jtj + lam * np.diag(np.diag(jtj)) + ridge * np.eye(self.n_theta)
                try:
                    delta = np.linalg.solve(m, -g)
                except np.linalg.LinAlgError:
                    lam *= 10.0
                    continue
                theta_t = self.project(theta + delta)
                c_t, h_t, a_t, cache_t = self.inner_solve(theta_t)
                j_t = self.objective_value(theta_t, c_t, h_t, a_t)
                if j_t < j_val:
                    rel_drop = (j_val - j_t) / max(j_val, 1e-300)
                    theta, c, h, a, cache, j_val = theta_t, c_t, h_t, a_t, cache_t, j_t
                    trace.append(j_val)
                    lam = max(lam / 3.0, 1e-12)
                    improved = True
                    break
                lam *= 10.0
            if not improved:
                converged = True  # no descent at any damping: local optimum
                break
            if rel_drop <= cfg.tol:
                converged = True
                break
        return theta, c, h, a, cache, trace, converged


def _collinear_pairs(prob: _Problem) -> list[tuple[str, str]]:
    spectra = np.fft.fftshift(
        np.fft.fft(prob.basis_fids, axis=1, norm="ortho"), axes=1
    )[:, prob.idx]
    pairs = []
    for i in range(prob.n_met):
        for j in range(i + 1, prob.n_met):
            denom = np.linalg.norm(spectra[i]) * np.linalg.norm(spectra[j])
            if denom == 0:
                continue
            corr = abs(np.vdot(spectra[i], spectra[j])) / denom
            if corr > COLLINEARITY_LIMIT:
                pairs.append((prob.names[i], prob.names[j]))
    return pairs


def tcr_reference(conc: dict[str, float]) -> float:
    """Total-creatine reference: sum over Cr and PCr entries present."""
    return sum(conc.get(name, 0.0) for name in TCR_MEMBERS)


def fit(spectrum: Spectrum, basis: BasisSet, cfg: FitConfig | None = None) -> QuantResult:
    """Quantify a spectrum against a basis set.

    Returns absolute concentrations, ratios to total creatine, relative
    Cramer-Rao bounds, and the fitted/baseline/residual curves over the
    fit window. Non-convergence is reported as a warning on the result,
    never silently.
    """
    cfg = cfg or FitConfig()
    fitter = _Fitter(spectrum, basis, cfg)
    prob = fitter.prob
    theta, c_n, h_n, a, cache, trace, converged = fitter.run()

    result_warnings: list[str] = []
    if not converged:
        warnings.warn(
            "fit reached max_outer_iters before meeting tol", FitConvergenceWarning
        )
        result_warnings.append("convergence: iteration cap reached before tolerance")
    for pair in _collinear_pairs(prob):
        result_warnings.append(f"collinear basis entries: {pair[0]}, {pair[1]}")

    scale = fitter.sigma_eff
    conc_values = np.maximum(c_n, 0.0) * scale
    conc = {name: float(v) for name, v in zip(prob.names, conc_values)}

    # Fisher information over (C, H, phi0, phi1, gamma, f); the lineshape
    # is held fixed at the solution (its simplex gauge is not identifiable).
    _, _, dmodel = fitter.residual_jacobian(theta, c_n, h_n, a, cache)
    L = prob.n_met
    g_mat = np.hstack([a, dmodel[:, : 2 + 2 * L]])
    state = FitState(
        metabolites=prob.names,
        conc=c_n,
        jacobian=g_mat,
        conc_cols=np.arange(L),
    )
    noise_ratio = fitter.sigma_est / fitter.sigma_eff
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegeneracyWarning)
        sd_percent = crlb_percent(state, noise_ratio)
    for w in caught:
        result_warnings.append(str(w.message))

    tcr = tcr_reference(conc)
    if tcr > 0:
        ratios = {name: float(v / tcr) for name, v in conc.items()}
    else:
        ratios = {}
        result_warnings.append("no creatine reference in basis; ratios unavailable")

    fitted_n = a @ np.concatenate([c_n, h_n])
    spl_amp = prob.spline @ h_n
    baseline_curve = cache["ph"][prob.idx].real * spl_amp * scale
    met_cols = cache["met_cols"]
    per_met = {
        name: met_cols[l].real * c_n[l] * scale for l, name in enumerate(prob.names)
    }
    data_curve = prob.y
    fitted_curve = fitted_n * scale

    return QuantResult(
        method="lcm",
        dataset_id=spectrum.meta.opaque_id if spectrum.meta else "",
        metabolites=list(prob.names),
        ratio_to_tcr=ratios,
        conc=conc,
        sd_percent=sd_percent,
        ppm=sig.ppm_axis(prob.acq, cfg.reference_ppm)[prob.idx],
        data=data_curve,
        fitted=fitted_curve,
        baseline=baseline_curve,
        residual=data_curve - fitted_curve,
        per_metabolite=per_met,
        objective_trace=[float(v) for v in trace],
        warnings=result_warnings,
    )


class LcmFitter(BaseEstimator):
    """sklearn-style wrapper: configure once, fit per spectrum.

    fit() stores the QuantResult on ``result_``; quantify() returns it
    directly.
    """

    def __init__(
        self,
        window=(0.2, 4.2),
        knot_spacing=0.4,
        lineshape_half_width=4,
        alpha_s=1.0,
        alpha_b=1.0,
        gamma_prior=2.0,
        gamma_sigma=2.0,
        f_sigma=3.0,
        max_outer_iters=100,
        tol=1e-8,
    ):
        self.window = window
        self.knot_spacing = knot_spacing
        self.lineshape_half_width = lineshape_half_width
        self.alpha_s = alpha_s
        self.alpha_b = alpha_b
        self.gamma_prior = gamma_prior
        self.gamma_sigma = gamma_sigma
        self.f_sigma = f_sigma
        self.max_outer_iters = max_outer_iters
        self.tol = tol

    def _config(self) -> FitConfig:
        return FitConfig(
            window=tuple(self.window),
            knot_spacing=self.knot_spacing,
            lineshape_half_width=self.lineshape_half_width,
            alpha_s=self.alpha_s,
            alpha_b=self.alpha_b,
            gamma_prior=self.gamma_prior,
            gamma_sigma=self.gamma_sigma,
            f_sigma=self.f_sigma,
            max_outer_iters=self.max_outer_iters,
            tol=self.tol,
        )

    def fit(self, spectrum: Spectrum, basis: BasisSet):
        self.result_ = fit(spectrum, basis, self._config())
        return self

    def quantify(self, spectrum: Spectrum, basis: BasisSet) -> QuantResult:
        return self.fit(spectrum, basis).result_
