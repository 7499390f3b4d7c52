import numpy as np
import pytest

from singletqaoa import DecaySeries, fit_exponential_decay, synthetic_series
from singletqaoa.errors import FitFailureError


def test_noiseless_recovery_exact():
    series = synthetic_series(39.4, 1.0, np.linspace(0.0, 60.0, 10))
    fit = fit_exponential_decay(series)
    assert abs(fit.t_lls - 39.4) <= 1e-6
    assert fit.residual_rms <= 1e-12
    assert fit.amplitude0 == pytest.approx(1.0, abs=1e-9)


def test_noisy_recovery_within_band():
    # Monte-Carlo: 2% multiplicative noise at 16 samples over [0, 60] s
    # stays within 5% of truth on every one of 100 seeds (10-point series
    # can stray to ~6% on the worst seed, so the band is quoted for 16)
    errs = []
    for seed in range(100):
        series = synthetic_series(39.4, 1.0, np.linspace(0.0, 60.0, 16),
                                  noise_fraction=0.02, seed=seed)
        fit = fit_exponential_decay(series)
        errs.append(abs(fit.t_lls - 39.4) / 39.4)
    assert max(errs) <= 0.05


def test_stderr_positive_under_noise():
    series = synthetic_series(10.0, 2.0, np.linspace(0.0, 30.0, 12),
                              noise_fraction=0.02, seed=1)
    fit = fit_exponential_decay(series)
    assert fit.t_lls_stderr > 0


def test_scale_invariance():
    times = np.linspace(0.0, 40.0, 9)
    s1 = synthetic_series(15.0, 1.0, times, noise_fraction=0.01, seed=4)
    s2 = DecaySeries(s1.times, tuple(3.7 * a for a in s1.amplitudes))
    f1 = fit_exponential_decay(s1)
    f2 = fit_exponential_decay(s2)
    assert abs(f1.t_lls - f2.t_lls) <= 1e-12


def test_two_point_series_rejected():
    with pytest.raises(ValueError):
        DecaySeries((0.0, 1.0), (1.0, 0.5))


def test_non_increasing_times_rejected():
    with pytest.raises(ValueError):
        DecaySeries((0.0, 1.0, 1.0), (1.0, 0.5, 0.2))


def test_constant_amplitudes_rejected():
    series = DecaySeries((0.0, 1.0, 2.0), (1.0, 1.0, 1.0))
    with pytest.raises(FitFailureError):
        fit_exponential_decay(series)


def test_growing_data_rejected():
    series = DecaySeries((0.0, 1.0, 2.0, 3.0), (1.0, 2.0, 4.1, 7.9))
    with pytest.raises(FitFailureError):
        fit_exponential_decay(series)


def test_determinism():
    series = synthetic_series(20.0, 1.0, np.linspace(0.0, 50.0, 11),
                              noise_fraction=0.02, seed=9)
    f1 = fit_exponential_decay(series)
    f2 = fit_exponential_decay(series)
    assert f1.t_lls == f2.t_lls
    assert f1.t_lls_stderr == f2.t_lls_stderr
