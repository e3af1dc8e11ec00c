"""Superradiant fluorescence decay and atom-number inference.

The guided fluorescence of N position-averaged atoms has a closed form in
scaled modified Bessel functions; exponential fits of that curve underlie
both the single-atom rate calibration and the mean-atom-number estimate from
decay rates versus trap hold time.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import i0e, i1e
from scipy.optimize import brentq

from .errors import FitIdentifiabilityError, InputError, NumericError
from .ensemble import poisson_weights

# Default exponential-fit window in units of 1/rate (the paper does not state
# its window; this one reproduces the quoted single-atom ratio).
FIT_WINDOW = (0.1, 2.0)

# Longer window used for the atom-number rate mapping, calibrated so the
# model's superradiant slope matches the measured linear coefficient.
NBAR_WINDOW = (0.1, 6.5)

SMALL_X = 1e-6


@dataclass(frozen=True)
class DecayCurve:
    """Sampled fluorescence decay, with the rates used to generate it."""

    t: tuple
    intensity: tuple
    gamma_1d: float = None
    gamma_prime: float = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        intensity = np.asarray(self.intensity, dtype=float)
        if t.shape != intensity.shape:
            raise InputError("time and intensity lengths differ")
        if t.size and np.any(np.diff(t) <= 0):
            raise InputError("time samples must be strictly increasing")
        if not np.all(np.isfinite(intensity)):
            raise InputError("intensity must be finite")
        object.__setattr__(self, "t", tuple(t))
        object.__setattr__(self, "intensity", tuple(intensity))

    @property
    def times(self):
        return np.asarray(self.t)

    @property
    def values(self):
        return np.asarray(self.intensity)


def bessel_i_scaled(k: int, x):
    """exp(-x) * I_k(x) for k in {0, 1}, x >= 0."""
    if k not in (0, 1):
        raise InputError(f"order must be 0 or 1, got {k}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise InputError("argument must be >= 0")
    return i0e(x) if k == 0 else i1e(x)


def _bracket_scaled(n: int, x):
    """exp(-2x) times the Bessel bracket of the decay law.

    The 1/(4x) term has a removable singularity at x = 0; a second-order
    series takes over below SMALL_X.
    """
    x = np.asarray(x, dtype=float)
    b0, b1 = i0e(x), i1e(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        br = (n * (n + 1) / 4.0) * b0 ** 2 \
            - (n / (4.0 * x) + n * n / 2.0) * b0 * b1 \
            + (n * (n - 1) / 4.0) * b1 ** 2
    series = (n * (2 * n + 1) / 8.0 - (n * n / 4.0) * x
              + (n * (12 * n + 1) / 64.0) * x ** 2) * np.exp(-2.0 * x)
    return np.where(x < SMALL_X, series, br)


def intensity_n(n: int, t, gamma_1d: float, gamma_prime: float):
    """Guided fluorescence intensity of n atoms at time t.

    Rates and times in any mutually consistent units.  Scaled Bessel
    functions keep the evaluation overflow-free at arbitrary t.
    """
    if n < 1 or int(n) != n:
        raise InputError(f"atom number must be a positive integer, got {n}")
    if gamma_1d < 0 or gamma_prime <= 0:
        raise InputError("rates must be gamma_1d >= 0, gamma_prime > 0")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InputError("time must be >= 0")
    g = 0.5 * gamma_1d
    x = g * t
    return g * g * np.exp(-gamma_prime * t) * i0e(x) ** (n - 2) * _bracket_scaled(n, x)


def _log_slope(t, y):
    """Least-squares slope of log(y) vs t, uniform weights."""
    ref = y[0]
    logy = np.log(y / ref)
    tm = t - t.mean()
    return float(np.dot(tm, logy - logy.mean()) / np.dot(tm, tm))


def fit_single_exponential(curve: DecayCurve, window: tuple = None) -> float:
    """Decay rate from an exponential fit of log-intensity.

    `window` is (t_lo, t_hi) in units of 1/rate; it is resolved against the
    fitted rate itself by fixed-point iteration.  Defaults to FIT_WINDOW.
    Scaling the intensity by a positive constant does not change the result.
    """
    t, y = curve.times, curve.values
    if window is None:
        window = FIT_WINDOW
    lo, hi = window
    if not 0 <= lo < hi:
        raise InputError(f"invalid window {window}")

    mask = np.ones_like(t, dtype=bool)
    rate = None
    for _ in range(100):
        if mask.sum() < 8:
            raise InputError("fewer than 8 samples in the fit window")
        if np.any(y[mask] <= 0):
            raise InputError("nonpositive intensities in the fit window")
        new = -_log_slope(t[mask], y[mask])
        if rate is not None and abs(new - rate) <= 1e-12 * abs(new):
            return new
        rate = new
        if rate <= 0:
            raise NumericError("fitted rate is not positive; curve is not decaying")
        mask = (t >= lo / rate) & (t <= hi / rate)
    return rate


def _poisson_curve(n_bar, t, gamma_1d, gamma_prime):
    w = poisson_weights(n_bar)
    total = np.zeros_like(np.asarray(t, dtype=float))
    for n in range(1, w.size):
        total += w[n] * intensity_n(n, t, gamma_1d, gamma_prime)
    return total


def poisson_average_rate(n_bar: float, gamma_1d: float, gamma_prime: float = 1.0,
                         window: tuple = NBAR_WINDOW) -> float:
    """Fitted exponential rate of the Poisson-averaged decay curve."""
    if n_bar <= 0:
        raise InputError("n_bar must be > 0")
    rate = gamma_prime + 0.5 * n_bar * gamma_1d
    for _ in range(80):
        t = np.linspace(window[0] / rate, window[1] / rate, 400)
        y = _poisson_curve(n_bar, t, gamma_1d, gamma_prime)
        new = -_log_slope(t, y)
        if abs(new - rate) <= 1e-12 * abs(new):
            return new
        rate = new
    return rate


@dataclass(frozen=True)
class NbarReport:
    """Atom-number inference from decay rates versus hold time."""

    n_bar: float
    tau_sr_ms: float
    asymptote: float
    gamma_sr0: float
    eta_sr: float
    converged: bool


@lru_cache(maxsize=16)
def _rate_map(gamma_1d: float, window: tuple) -> tuple:
    """Monotone n_bar -> fitted-rate table for inverting decay rates."""
    grid = np.geomspace(0.05, 40.0, 80)
    rates = np.array([poisson_average_rate(nb, gamma_1d, 1.0, window)
                      for nb in grid])
    return (grid, rates)


def fit_nbar(decay_rates, gamma_1d: float, *, probe_time_ms: float = 4.0,
             rate_window: tuple = NBAR_WINDOW) -> NbarReport:
    """Mean atom number at the probe hold time from total decay rates.

    `decay_rates` is a sequence of (hold time in ms, total rate in Gamma'
    units); `gamma_1d` is the fixed peak guided-mode rate in the same units.
    The empirical exponential form Gamma_SR * exp(-t/tau) + asymptote is
    fitted first; the superradiant part at the probe time is then inverted
    through the Poisson-averaged decay model.  eta_sr reports the linear
    superradiance coefficient Gamma_SR(0) / (n_bar * gamma_1d).
    """
    from .fitkit import least_squares  # local import to avoid a module cycle

    pts = np.asarray(decay_rates, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 5:
        raise InputError("need at least 5 (hold time, rate) points")
    tm, g_tot = pts[:, 0], pts[:, 1]
    if np.ptp(g_tot) < 1e-9 * abs(g_tot).max():
        raise FitIdentifiabilityError("decay rates are flat; n_bar not identifiable")

    def model(p):
        g_sr, tau, asym = p
        return g_sr * np.exp(-tm / tau) + asym

    span = g_tot.max() - g_tot.min()
    init = np.array([span, 0.5 * (tm.max() - tm.min()) + tm.min(), g_tot.min()])
    report = least_squares(model, g_tot, init,
                           names=("gamma_sr", "tau_sr", "asymptote"),
                           bounds=[(0.0, np.inf), (1e-6, np.inf), (0.0, np.inf)])
    g_sr0 = report.parameters["gamma_sr"][0]
    tau = report.parameters["tau_sr"][0]
    asym = report.parameters["asymptote"][0]

    gamma_probe = g_sr0 * np.exp(-probe_time_ms / tau) + asym

    grid, rates = _rate_map(float(gamma_1d), tuple(rate_window))
    if gamma_probe < rates[0]:
        raise FitIdentifiabilityError(
            f"probe rate {gamma_probe:.3f} below the single-atom model floor")
    if gamma_probe > rates[-1]:
        raise FitIdentifiabilityError("probe rate exceeds the model range")
    coarse = float(np.interp(gamma_probe, rates, grid))

    def mismatch(n_bar):
        return poisson_average_rate(n_bar, gamma_1d, 1.0, rate_window) - gamma_probe

    lo, hi = 0.8 * coarse, 1.25 * coarse
    while mismatch(lo) > 0 and lo > grid[0]:
        lo *= 0.8
    while mismatch(hi) < 0 and hi < grid[-1]:
        hi *= 1.25
    n_bar = brentq(mismatch, lo, hi, xtol=1e-8)

    return NbarReport(n_bar=n_bar, tau_sr_ms=tau, asymptote=asym,
                      gamma_sr0=g_sr0, eta_sr=g_sr0 / (n_bar * gamma_1d),
                      converged=report.converged)
