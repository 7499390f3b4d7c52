"""Exponential lifetime extraction from amplitude-vs-storage-time series."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from .errors import FitFailureError


@dataclass(frozen=True)
class DecaySeries:
    times: tuple[float, ...]
    amplitudes: tuple[float, ...]
    label: str = ""

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        a = np.asarray(self.amplitudes, dtype=float)
        if len(t) != len(a) or len(t) < 3:
            raise ValueError("need equal-length series with at least 3 points")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", tuple(float(v) for v in t))
        object.__setattr__(self, "amplitudes", tuple(float(v) for v in a))


@dataclass(frozen=True)
class DecayFit:
    t_lls: float
    t_lls_stderr: float
    amplitude0: float
    residual_rms: float


def _model(t, a0, rate):
    return a0 * np.exp(-rate * t)


def fit_exponential_decay(series: DecaySeries) -> DecayFit:
    """Least-squares fit of A * exp(-t / T).

    Initialized from a log-linear regression, refined by damped nonlinear
    least squares; standard errors come from the linearized covariance.
    """
    t = np.asarray(series.times)
    a_raw = np.asarray(series.amplitudes)
    if np.ptp(a_raw) == 0.0:
        raise FitFailureError("amplitudes are constant; no decay to fit")
    # normalizing out the overall amplitude makes the fitted lifetime
    # exactly invariant under rescaled data
    scale = np.abs(a_raw).max()
    a = a_raw / scale

    positive = a > 0
    if positive.sum() >= 2:
        # log-linear initialization on the positive subset
        coeff = np.polyfit(t[positive], np.log(a[positive]), 1)
        rate0 = -coeff[0]
        a0 = float(np.exp(coeff[1]))
    else:
        rate0 = 1.0 / max(t[-1] - t[0], 1e-12)
        a0 = float(a[0])
    if rate0 <= 0:
        rate0 = 1.0 / max(t[-1] - t[0], 1e-12)

    try:
        popt, pcov = curve_fit(_model, t, a, p0=[a0, rate0], maxfev=20000)
    except RuntimeError as exc:
        raise FitFailureError(f"exponential fit did not converge: {exc}") from exc
    a_fit, rate = popt
    if rate <= 0 or not np.isfinite(rate):
        raise FitFailureError(
            f"fitted rate {rate:.3e} 1/s is not a decay; data may be growing")
    residuals = a - _model(t, *popt)
    rms = float(np.sqrt(np.mean(residuals ** 2))) * scale
    var_rate = pcov[1, 1] if np.all(np.isfinite(pcov)) else np.nan
    t_lls = 1.0 / rate
    # delta method: sigma_T = sigma_rate / rate^2
    stderr = float(np.sqrt(var_rate) / rate ** 2) if np.isfinite(var_rate) else 0.0
    return DecayFit(t_lls=float(t_lls), t_lls_stderr=stderr,
                    amplitude0=float(a_fit * scale), residual_rms=rms)


def synthetic_series(t_lls: float, amplitude0: float, times,
                     noise_fraction: float = 0.0, seed: int = 0,
                     label: str = "synthetic") -> DecaySeries:
    """Noiseless or multiplicatively noisy synthetic decay, seeded."""
    t = np.asarray(times, dtype=float)
    a = amplitude0 * np.exp(-t / t_lls)
    if noise_fraction > 0:
        rng = np.random.default_rng(np.random.SeedSequence([seed]))
        a = a * (1.0 + noise_fraction * rng.standard_normal(len(t)))
    return DecaySeries(times=tuple(t), amplitudes=tuple(a), label=label)
