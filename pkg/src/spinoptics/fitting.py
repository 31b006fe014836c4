"""Nonlinear least-squares recovery of physical parameters from spectra.

A small Levenberg-Marquardt engine with analytic Jacobians drives all
fits: multi-peak lineshapes with a linear baseline, exponential decay and
inversion recovery, damped cosines, and the linear-regression extraction
of ground/excited g-factors from four-line splittings. Uncertainties are
1-sigma from the linearized covariance at the optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks, peak_widths

from .constants import MU_B_OVER_H_GHZ_PER_T
from .spectra import Spectrum

MAX_ITER = 200
XTOL = 1e-10
GTOL = 1e-10

_LN2 = math.log(2.0)
_EXP_CLIP = 700.0


@dataclass
class FitResult:
    """Named parameter estimates with 1-sigma uncertainties.

    residual_norm is the 2-norm of the residual vector at the returned
    parameters; converged reflects the step/gradient stopping criteria.
    """

    params: dict[str, float]
    sigmas: dict[str, float]
    residual_norm: float
    converged: bool
    n_iter: int

    def __post_init__(self):
        if self.residual_norm < 0.0:
            raise ValueError("residual_norm must be >= 0")
        for name, s in self.sigmas.items():
            if not (math.isnan(s) or s >= 0.0):
                raise ValueError(f"sigma for {name} must be >= 0")


def _safe_exp(x: np.ndarray) -> np.ndarray:
    return np.exp(np.clip(x, -_EXP_CLIP, _EXP_CLIP))


# ---------------------------------------------------------------------------
# model functions: each returns (values, jacobian) with analytic derivatives
# ---------------------------------------------------------------------------

def peaks_model(x, params, n_peaks: int, kind: str = "lorentzian", mix: float = 0.5):
    """n_peaks height-parameterized lines plus a linear baseline.

    params = [c1, w1, a1, ..., cN, wN, aN, b0, b1]; baseline b0 + b1*x.
    """
    x = np.asarray(x, dtype=float)
    params = np.asarray(params, dtype=float)
    if params.size != 3 * n_peaks + 2:
        raise ValueError("parameter vector length must be 3*n_peaks + 2")
    y = params[-2] + params[-1] * x
    jac = np.zeros((x.size, params.size))
    jac[:, -2] = 1.0
    jac[:, -1] = x
    for i in range(n_peaks):
        c, w, a = params[3 * i : 3 * i + 3]
        if kind in ("lorentzian", "pseudo_voigt"):
            z = 2.0 * (x - c) / w
            u = 1.0 / (1.0 + z * z)
            lv = u
            lc = a * 4.0 * z * u * u / w
            lw = a * 2.0 * z * z * u * u / w
        if kind in ("gaussian", "pseudo_voigt"):
            t = (x - c) / w
            e = _safe_exp(-4.0 * _LN2 * t * t)
            gv = e
            gc = a * e * 8.0 * _LN2 * t / w
            gw = a * e * 8.0 * _LN2 * t * t / w
        if kind == "lorentzian":
            val, dc, dw = lv, lc, lw
        elif kind == "gaussian":
            val, dc, dw = gv, gc, gw
        elif kind == "pseudo_voigt":
            val = mix * lv + (1.0 - mix) * gv
            dc = mix * lc + (1.0 - mix) * gc
            dw = mix * lw + (1.0 - mix) * gw
        else:
            raise ValueError(f"unknown peak shape {kind!r}")
        y = y + a * val
        jac[:, 3 * i] = dc
        jac[:, 3 * i + 1] = dw
        jac[:, 3 * i + 2] = val
    return y, jac


def exp_decay_model(t, params):
    """a*exp(-t/tau) + c with params = [a, tau, c]."""
    t = np.asarray(t, dtype=float)
    a, tau, c = params
    e = _safe_exp(-t / tau)
    y = a * e + c
    jac = np.empty((t.size, 3))
    jac[:, 0] = e
    jac[:, 1] = a * e * t / (tau * tau)
    jac[:, 2] = 1.0
    return y, jac


def inversion_recovery_model(t, params):
    """m_inf*(1 - 2*exp(-t/t1)) with params = [m_inf, t1]."""
    t = np.asarray(t, dtype=float)
    m, t1 = params
    e = _safe_exp(-t / t1)
    y = m * (1.0 - 2.0 * e)
    jac = np.empty((t.size, 2))
    jac[:, 0] = 1.0 - 2.0 * e
    jac[:, 1] = -2.0 * m * e * t / (t1 * t1)
    return y, jac


def damped_cosine_model(t_ns, params):
    """a*cos(2*pi*f*t + phi)*exp(-t/tau) + c; t in ns, f in MHz.

    params = [a, f_mhz, phi, tau_ns, c].
    """
    t = np.asarray(t_ns, dtype=float)
    a, f_mhz, phi, tau, c = params
    phase = 2.0 * math.pi * f_mhz * 1e-3 * t + phi
    e = _safe_exp(-t / tau)
    cosp = np.cos(phase)
    sinp = np.sin(phase)
    y = a * cosp * e + c
    jac = np.empty((t.size, 5))
    jac[:, 0] = cosp * e
    jac[:, 1] = -a * sinp * e * 2.0 * math.pi * 1e-3 * t
    jac[:, 2] = -a * sinp * e
    jac[:, 3] = a * cosp * e * t / (tau * tau)
    jac[:, 4] = 1.0
    return y, jac


# ---------------------------------------------------------------------------
# Levenberg-Marquardt core
# ---------------------------------------------------------------------------

def _lm_least_squares(model, p0, y, max_iter=MAX_ITER, xtol=XTOL, gtol=GTOL):
    """Minimize ||model(p)[0] - y||^2; model returns (values, jacobian).

    Damped normal equations with Marquardt diagonal scaling; steps are
    only accepted when they do not increase the objective, so the returned
    residual never exceeds the initial one. Stops on gradient inf-norm
    < gtol, relative step < xtol, or max_iter.
    """
    p = np.asarray(p0, dtype=float).copy()
    yhat, jac = model(p)
    r = yhat - y
    sse = float(r @ r)
    lam = 1e-3
    n_iter = 0
    converged = False
    for _ in range(max_iter):
        grad = jac.T @ r
        if np.max(np.abs(grad)) < gtol:
            converged = True
            break
        jtj = jac.T @ jac
        diag = np.diag(jtj).copy()
        floor = max(np.max(diag), 1e-300) * 1e-14
        diag[diag < floor] = floor
        accepted = False
        while lam <= 1e10:
            try:
                step = np.linalg.solve(jtj + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(jtj + lam * np.diag(diag), -grad, rcond=None)[0]
            trial = p + step
            y2, j2 = model(trial)
            r2 = y2 - y
            sse2 = float(r2 @ r2)
            if np.isfinite(sse2) and sse2 <= sse:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            break
        rel_step = float(np.linalg.norm(step)) / max(float(np.linalg.norm(p)), xtol)
        p, yhat, jac, r, sse = trial, y2, j2, r2, sse2
        n_iter += 1
        lam = max(lam / 3.0, 1e-12)
        if rel_step < xtol:
            converged = True
            break
    return p, r, jac, sse, n_iter, converged


def _sigmas_from_jacobian(jac: np.ndarray, sse: float, n_points: int) -> np.ndarray:
    """1-sigma from the linearized covariance sse/dof * (J^T J)^-1."""
    n_params = jac.shape[1]
    dof = max(n_points - n_params, 1)
    cov = (sse / dof) * np.linalg.pinv(jac.T @ jac)
    return np.sqrt(np.clip(np.diag(cov), 0.0, None))


# ---------------------------------------------------------------------------
# peak fitting
# ---------------------------------------------------------------------------

@dataclass
class PeakModel:
    """Initial guess / refined description of a multi-peak spectrum.

    Per-peak (center, fwhm, amplitude) in grid units; amplitudes may be
    negative (holes). The baseline is offset + slope*(x - x_ref) with
    x_ref the grid midpoint used during fitting.
    """

    n_peaks: int
    centers: tuple[float, ...]
    fwhms: tuple[float, ...]
    amplitudes: tuple[float, ...]
    shape: str = "lorentzian"
    baseline_offset: float = 0.0
    baseline_slope: float = 0.0
    mix: float = 0.5

    def __post_init__(self):
        if self.n_peaks < 1:
            raise ValueError("need at least one peak")
        for name in ("centers", "fwhms", "amplitudes"):
            values = tuple(float(v) for v in getattr(self, name))
            if len(values) != self.n_peaks:
                raise ValueError(f"{name} must list one value per peak")
            setattr(self, name, values)
        if any(w <= 0.0 for w in self.fwhms):
            raise ValueError("fwhm guesses must be > 0")
        if self.shape not in ("lorentzian", "gaussian", "pseudo_voigt"):
            raise ValueError(f"unknown peak shape {self.shape!r}")


def initial_peak_model(
    spectrum: Spectrum,
    n_peaks: int,
    shape: str = "lorentzian",
    negative: bool = False,
    mix: float = 0.5,
) -> PeakModel:
    """Data-driven initial guess: local maxima (minima for holes) above a
    prominence of 3x the median absolute deviation of the detrended trace.

    When fewer candidates than n_peaks are found, the remainder seed at
    evenly spaced grid quantiles with zero amplitude.
    """
    x = spectrum.grid
    y = spectrum.intensity
    coeffs = np.polyfit(x, y, 1)
    detrended = y - np.polyval(coeffs, x)
    signal = -detrended if negative else detrended
    mad = float(np.median(np.abs(signal - np.median(signal))))
    prominence = 3.0 * mad if mad > 0.0 else 1e-12 * max(1.0, float(np.max(np.abs(signal))))
    idx, props = find_peaks(signal, prominence=prominence)
    order = np.argsort(props["prominences"])[::-1]
    idx = idx[order][:n_peaks]

    step = spectrum.step
    centers, fwhms, amps = [], [], []
    if idx.size:
        widths = peak_widths(signal, np.sort(idx), rel_height=0.5)[0]
        for i, w in zip(np.sort(idx), widths):
            centers.append(float(x[i]))
            fwhms.append(max(float(w) * step, step))
            amps.append(float(detrended[i]))
    missing = n_peaks - len(centers)
    if missing > 0:
        default_w = float(np.median(fwhms)) if fwhms else (x[-1] - x[0]) / 20.0
        quantiles = np.linspace(0.0, 1.0, missing + 2)[1:-1]
        for q in quantiles:
            centers.append(float(x[0] + q * (x[-1] - x[0])))
            fwhms.append(default_w)
            amps.append(0.0)
    order = np.argsort(centers)
    return PeakModel(
        n_peaks=n_peaks,
        centers=tuple(np.asarray(centers)[order]),
        fwhms=tuple(np.asarray(fwhms)[order]),
        amplitudes=tuple(np.asarray(amps)[order]),
        shape=shape,
        baseline_offset=float(np.polyval(coeffs, 0.5 * (x[0] + x[-1]))),
        baseline_slope=float(coeffs[0]),
        mix=mix,
    )


def fit_peaks(spectrum: Spectrum, model: PeakModel) -> FitResult:
    """Levenberg-Marquardt refinement of a multi-peak model.

    Returns center_i / fwhm_i / amplitude_i (1-based, sorted by center)
    plus baseline_offset and baseline_slope. Never raises on poor data:
    non-convergence is reported through converged=False with the
    best-so-far parameters.
    """
    x = spectrum.grid
    y = spectrum.intensity
    for c in model.centers:
        if not x[0] <= c <= x[-1]:
            raise ValueError(f"initial center {c} lies outside the spectrum grid")
    x_ref = 0.5 * float(x[0] + x[-1])
    xs = x - x_ref

    p0 = np.empty(3 * model.n_peaks + 2)
    for i in range(model.n_peaks):
        p0[3 * i] = model.centers[i] - x_ref
        p0[3 * i + 1] = model.fwhms[i]
        p0[3 * i + 2] = model.amplitudes[i]
    p0[-2] = model.baseline_offset
    p0[-1] = model.baseline_slope

    def lm_model(params):
        return peaks_model(xs, params, model.n_peaks, model.shape, model.mix)

    p, r, jac, sse, n_iter, converged = _lm_least_squares(lm_model, p0, y)
    sig = _sigmas_from_jacobian(jac, sse, y.size)

    order = np.argsort([p[3 * i] for i in range(model.n_peaks)])
    params: dict[str, float] = {}
    sigmas: dict[str, float] = {}
    for rank, i in enumerate(order, start=1):
        params[f"center_{rank}"] = float(p[3 * i] + x_ref)
        params[f"fwhm_{rank}"] = float(abs(p[3 * i + 1]))
        params[f"amplitude_{rank}"] = float(p[3 * i + 2])
        sigmas[f"center_{rank}"] = float(sig[3 * i])
        sigmas[f"fwhm_{rank}"] = float(sig[3 * i + 1])
        sigmas[f"amplitude_{rank}"] = float(sig[3 * i + 2])
    params["baseline_offset"] = float(p[-2])
    params["baseline_slope"] = float(p[-1])
    sigmas["baseline_offset"] = float(sig[-2])
    sigmas["baseline_slope"] = float(sig[-1])
    return FitResult(params, sigmas, math.sqrt(sse), converged, n_iter)


# ---------------------------------------------------------------------------
# g-factor regression
# ---------------------------------------------------------------------------

def _origin_regression(b: np.ndarray, y: np.ndarray, w: np.ndarray):
    """Weighted least-squares slope of y = slope*b through the origin."""
    sxx = float(np.sum(w * b * b))
    slope = float(np.sum(w * b * y)) / sxx
    resid = y - slope * b
    dof = max(b.size - 1, 1)
    var = float(np.sum(w * resid * resid)) / dof / sxx
    return slope, math.sqrt(max(var, 0.0)), resid


def fit_gfactors(peak_centers, fields_t, weights=None) -> FitResult:
    """Ground/excited g-factors from four-line positions over >= 2 fields.

    peak_centers: one set of four transition frequencies (GHz) per field;
    label assignment is irrelevant because the spin-conserving separation
    is taken between the middle pair and the spin-flip separation between
    the outer pair after sorting. Separations regress linearly through the
    origin against field; g_g and g_e follow from the sum and difference
    slopes divided by mu_B/h.
    """
    fields = np.asarray(fields_t, dtype=float)
    if fields.size < 2 or np.unique(fields).size < 2:
        raise ValueError("need at least two distinct fields")
    centers = [np.sort(np.asarray(c, dtype=float)) for c in peak_centers]
    if len(centers) != fields.size or any(c.size != 4 for c in centers):
        raise ValueError("need one set of four transition frequencies per field")

    ab = np.array([c[2] - c[1] for c in centers])  # spin-conserving pair
    cd = np.array([c[3] - c[0] for c in centers])  # spin-flip pair
    w = np.ones_like(fields) if weights is None else np.asarray(weights, dtype=float)

    slope_diff, sig_diff, r_ab = _origin_regression(fields, ab, w)
    slope_sum, sig_sum, r_cd = _origin_regression(fields, cd, w)
    k = MU_B_OVER_H_GHZ_PER_T
    g_ground = (slope_sum - slope_diff) / (2.0 * k)
    g_excited = (slope_sum + slope_diff) / (2.0 * k)
    sigma_g = math.sqrt(sig_sum**2 + sig_diff**2) / (2.0 * k)
    residual_norm = math.sqrt(float(r_ab @ r_ab + r_cd @ r_cd))
    return FitResult(
        params={"g_ground": g_ground, "g_excited": g_excited},
        sigmas={"g_ground": sigma_g, "g_excited": sigma_g},
        residual_norm=residual_norm,
        converged=True,
        n_iter=0,
    )


# ---------------------------------------------------------------------------
# trace fits
# ---------------------------------------------------------------------------

def fit_exponential(trace: Spectrum, kind: str = "decay") -> FitResult:
    """Fit a*exp(-t/tau)+c (kind="decay") or m_inf*(1-2exp(-t/T1))
    (kind="inversion_recovery") to a time trace (ns axis).

    A constant trace has no identifiable time constant and returns
    amplitude 0 with converged=False; a non-positive fitted time constant
    is flagged the same way.
    """
    if kind not in ("decay", "inversion_recovery"):
        raise ValueError(f"unknown exponential kind {kind!r}")
    t = trace.grid
    y = trace.intensity
    if t.size < 4:
        raise ValueError("need at least 4 samples")
    span = float(t[-1] - t[0])
    scale = max(float(np.max(np.abs(y))), 1.0)
    if float(np.ptp(y)) <= 1e-12 * scale:
        if kind == "decay":
            return FitResult(
                params={"amplitude": 0.0, "tau_ns": math.nan, "offset": float(np.mean(y))},
                sigmas={"amplitude": math.inf, "tau_ns": math.inf, "offset": math.inf},
                residual_norm=float(np.linalg.norm(y - np.mean(y))),
                converged=False,
                n_iter=0,
            )
        return FitResult(
            params={"m_inf": float(np.mean(y)), "t_1_ns": math.nan},
            sigmas={"m_inf": math.inf, "t_1_ns": math.inf},
            residual_norm=float(np.linalg.norm(y - np.mean(y))),
            converged=False,
            n_iter=0,
        )

    if kind == "decay":
        c0 = float(np.mean(y[-max(2, y.size // 10) :]))
        a0 = float(y[0] - c0)
        tau0 = span / 3.0
        if a0 != 0.0:
            target = abs(a0) / math.e
            below = np.nonzero(np.abs(y - c0) < target)[0]
            if below.size:
                tau0 = max(float(t[below[0]] - t[0]), span / 100.0)
        p, r, jac, sse, n_iter, converged = _lm_least_squares(
            lambda q: exp_decay_model(t, q), np.array([a0, tau0, c0]), y
        )
        names = ("amplitude", "tau_ns", "offset")
        tau_fitted = p[1]
    else:
        m0 = float(np.mean(y[-max(2, y.size // 10) :]))
        t10 = span / 3.0
        crossings = np.nonzero(np.diff(np.sign(y)) != 0)[0]
        if crossings.size and m0 != 0.0:
            t10 = max(float(t[crossings[0]]) / _LN2, span / 100.0)
        p, r, jac, sse, n_iter, converged = _lm_least_squares(
            lambda q: inversion_recovery_model(t, q), np.array([m0, t10]), y
        )
        names = ("m_inf", "t_1_ns")
        tau_fitted = p[1]

    if not tau_fitted > 0.0:
        converged = False
    sig = _sigmas_from_jacobian(jac, sse, y.size)
    return FitResult(
        params={n: float(v) for n, v in zip(names, p)},
        sigmas={n: float(s) for n, s in zip(names, sig)},
        residual_norm=math.sqrt(sse),
        converged=converged,
        n_iter=n_iter,
    )


def fit_damped_cosine(trace: Spectrum) -> FitResult:
    """Fit a*cos(2*pi*f*t+phi)*exp(-t/tau)+c with f seeded from the
    dominant discrete-Fourier bin of the mean-subtracted trace.

    Returns converged=False without fitting when no Fourier bin dominates
    (flat or non-oscillatory trace).
    """
    t = trace.grid
    y = trace.intensity
    step = trace.step
    centered = y - np.mean(y)
    mag = np.abs(np.fft.rfft(centered))
    if mag.size < 3:
        raise ValueError("trace too short for a frequency estimate")
    k = int(np.argmax(mag[1:])) + 1
    dominance = mag[k] / max(float(np.median(mag[1:])), 1e-300)
    if not np.isfinite(dominance) or dominance < 5.0 or mag[k] <= 0.0:
        return FitResult(
            params={
                "amplitude": 0.0,
                "frequency_mhz": math.nan,
                "phase": 0.0,
                "tau_ns": math.nan,
                "offset": float(np.mean(y)),
            },
            sigmas={n: math.inf for n in ("amplitude", "frequency_mhz", "phase", "tau_ns", "offset")},
            residual_norm=float(np.linalg.norm(centered)),
            converged=False,
            n_iter=0,
        )
    freqs_mhz = np.fft.rfftfreq(y.size, d=step) * 1e3
    spectrum_bin = np.fft.rfft(centered)[k]
    p0 = np.array(
        [
            float(np.max(np.abs(centered))),
            float(freqs_mhz[k]),
            float(np.angle(spectrum_bin)),
            (t[-1] - t[0]) / 2.0,
            float(np.mean(y)),
        ]
    )
    p, r, jac, sse, n_iter, converged = _lm_least_squares(
        lambda q: damped_cosine_model(t, q), p0, y
    )
    names = ("amplitude", "frequency_mhz", "phase", "tau_ns", "offset")
    sig = _sigmas_from_jacobian(jac, sse, y.size)
    params = {n: float(v) for n, v in zip(names, p)}
    # fold sign/frequency ambiguities into the canonical branch
    if params["frequency_mhz"] < 0.0:
        params["frequency_mhz"] = -params["frequency_mhz"]
        params["phase"] = -params["phase"]
    if params["amplitude"] < 0.0:
        params["amplitude"] = -params["amplitude"]
        params["phase"] += math.pi
    params["phase"] = math.remainder(params["phase"], 2.0 * math.pi)
    return FitResult(
        params=params,
        sigmas={n: float(s) for n, s in zip(names, sig)},
        residual_norm=math.sqrt(sse),
        converged=converged,
        n_iter=n_iter,
    )


def fit_eseem_frequencies(
    trace: Spectrum,
    envelope: FitResult,
    rel_prominence: float = 0.3,
    pad_factor: int = 4,
) -> list[float]:
    """Nuclear modulation frequencies (MHz) of an echo-decay trace.

    The fitted exponential envelope is divided out, the remainder is
    mean-subtracted, Hann-windowed and zero-padded pad_factor times, and
    the frequencies of magnitude-spectrum maxima above rel_prominence of
    the global maximum are returned (sorted, ascending). When the trace
    axis is total evolution 2*tau (meta["time_axis"] == "two_tau"),
    frequencies are doubled to report true Larmor values. May be empty.
    """
    for key in ("amplitude", "tau_ns", "offset"):
        if key not in envelope.params:
            raise ValueError("envelope must be a fit_exponential decay result")
    t = trace.grid
    env = (
        envelope.params["amplitude"] * _safe_exp(-t / envelope.params["tau_ns"])
        + envelope.params["offset"]
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        d = trace.intensity / env
    d[~np.isfinite(d)] = 0.0
    d -= np.mean(d)
    if float(np.max(np.abs(d))) < 1e-9:
        return []
    padded = np.zeros(pad_factor * d.size)
    padded[: d.size] = d * np.hanning(d.size)
    mag = np.abs(np.fft.rfft(padded))
    freqs_mhz = np.fft.rfftfreq(padded.size, d=trace.step) * 1e3
    if trace.meta.get("time_axis") == "two_tau":
        freqs_mhz = freqs_mhz * 2.0
    idx, _ = find_peaks(mag, prominence=rel_prominence * float(np.max(mag)))
    return sorted(float(freqs_mhz[i]) for i in idx)
