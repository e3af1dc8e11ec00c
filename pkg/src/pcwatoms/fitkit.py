"""Damped least-squares engine and the model-specific fitters.

The engine is a Levenberg-Marquardt loop with numerical Jacobians, box
bounds and covariance-based uncertainties; the fitters wrap it with the
forward models for intensity profiles, dispersion relations and TE/TM
atomic spectra, each with documented initialization heuristics.
"""

from dataclasses import dataclass

import numpy as np

from .errors import FitIdentifiabilityError, InputError
from .ensemble import (EnsembleSpec, Spectrum, average_poisson,
                       od_resonant, od_transmission)
from .spinmodel import CouplingRates, _bright_from_weight
from .units import GAMMA_0_MHZ

MAX_ITER = 500
COST_TOL = 1e-10
GRAD_TOL = 1e-8


@dataclass(frozen=True)
class FitReport:
    """Result of a damped least-squares fit.

    parameters maps name -> (value, one-sigma uncertainty); at_bound flags
    parameters pinned at a box bound.  Uncertainties come from the
    chi-square-scaled covariance of the final Jacobian.
    """

    parameters: dict
    chi2: float
    iterations: int
    converged: bool
    covariance: np.ndarray
    at_bound: dict
    message: str = ""

    def value(self, name):
        return self.parameters[name][0]

    def sigma(self, name):
        return self.parameters[name][1]


def _jacobian(residual, p, lower, upper, base):
    """Central-difference Jacobian, sampling inside the bound box."""
    m, k = base.size, p.size
    jac = np.empty((m, k))
    for j in range(k):
        h = 1e-6 * max(abs(p[j]), 1e-6)
        lo = max(p[j] - h, lower[j])
        hi = min(p[j] + h, upper[j])
        if hi <= lo:
            jac[:, j] = 0.0
            continue
        pj = p.copy()
        pj[j] = hi
        r_hi = residual(pj)
        pj[j] = lo
        r_lo = residual(pj)
        jac[:, j] = (r_hi - r_lo) / (hi - lo)
    return jac


def least_squares(model, data, init, *, sigma=None, bounds=None, names=None,
                  max_iter: int = MAX_ITER) -> FitReport:
    """Fit model(params) -> curve to data by damped Gauss-Newton.

    Trust-region style damping: the normal equations are solved with an
    adaptive lambda * diag(JtJ) term, steps are accepted only when the cost
    decreases, and iteration stops when the relative cost change drops below
    1e-10 or the gradient norm below 1e-8.  Hitting the iteration cap yields
    a non-converged report rather than an exception.
    """
    y = np.asarray(data, dtype=float)
    p = np.asarray(init, dtype=float).copy()
    k = p.size
    if names is None:
        names = tuple(f"p{i}" for i in range(k))
    if len(names) != k:
        raise InputError("parameter name count does not match init")
    if bounds is None:
        lower = np.full(k, -np.inf)
        upper = np.full(k, np.inf)
    else:
        lower = np.asarray([b[0] for b in bounds], dtype=float)
        upper = np.asarray([b[1] for b in bounds], dtype=float)
    if not np.all(np.isfinite(p)):
        raise InputError("initial parameters must be finite")
    if np.any(p < lower) or np.any(p > upper):
        raise InputError("initial parameters must lie within the bounds")
    w = np.ones_like(y) if sigma is None else 1.0 / np.asarray(sigma, dtype=float)

    def residual(params):
        return (np.asarray(model(params), dtype=float) - y) * w

    r = residual(p)
    cost = float(r @ r)
    lam = 1e-3
    iterations = 0
    converged = False
    message = "iteration cap reached"
    jac = _jacobian(residual, p, lower, upper, r)

    while iterations < max_iter:
        iterations += 1
        jtj = jac.T @ jac
        grad = jac.T @ r
        if np.max(np.abs(grad)) < GRAD_TOL:
            converged = True
            message = "gradient norm below tolerance"
            break
        accepted = False
        for _ in range(40):
            damped = jtj + lam * np.diag(np.clip(np.diag(jtj), 1e-14, None))
            try:
                step = np.linalg.solve(damped, -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = np.clip(p + step, lower, upper)
            r_trial = residual(trial)
            cost_trial = float(r_trial @ r_trial)
            if np.isfinite(cost_trial) and cost_trial < cost:
                rel = (cost - cost_trial) / max(cost, 1e-300)
                p, r, cost = trial, r_trial, cost_trial
                lam = max(lam * 0.3, 1e-12)
                accepted = True
                if rel < COST_TOL:
                    converged = True
                    message = "relative cost change below tolerance"
                break
            lam *= 10.0
        if not accepted:
            converged = True
            message = "no downhill step found (local minimum)"
            break
        if converged:
            break
        jac = _jacobian(residual, p, lower, upper, r)

    jac = _jacobian(residual, p, lower, upper, r)
    dof = max(y.size - k, 1)
    try:
        cov = np.linalg.pinv(jac.T @ jac) * (cost / dof)
    except np.linalg.LinAlgError:
        cov = np.full((k, k), np.nan)
    sigmas = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    tol = 1e-12
    at_bound = {}
    params = {}
    for j, name in enumerate(names):
        scale = max(abs(p[j]), 1.0)
        at_bound[name] = bool(p[j] - lower[j] <= tol * scale
                              or upper[j] - p[j] <= tol * scale)
        params[name] = (float(p[j]), float(sigmas[j]))
    return FitReport(parameters=params, chi2=cost, iterations=iterations,
                     converged=converged, covariance=cov, at_bound=at_bound,
                     message=message)


# ---------------------------------------------------------------------------
# intensity profile (weak-cavity standing wave)

@dataclass(frozen=True)
class ProfileFit:
    """Standing-wave profile parameters; regime is 'band' or 'bandgap'."""

    delta_k_x: float
    r_t: float
    i_1: float
    regime: str
    kappa_x: float
    report: FitReport


def cavity_profile(x, delta_k, r_t, i_1, length):
    """|E(x)|^2 of a weak cavity: |exp(ikx) - R exp(2ikL) exp(-ikx)|^2 * I1."""
    return i_1 * (1.0 + r_t ** 2 - 2.0 * r_t * np.cos(2.0 * delta_k * (length - x)))


def cavity_profile_gap(x, kappa, r_t, i_1, length):
    """Gap-side profile: same cavity form continued to delta_k = i kappa.

    Reduces to i_1 * exp(-2 kappa x) when kappa * length >> 1; the second
    term carries the back-reflected growing tail near the far end.
    """
    return i_1 * (np.exp(-kappa * x) - r_t * np.exp(-kappa * (2.0 * length - x))) ** 2


def fit_intensity_profile(x_nm, intensity, length_nm: float) -> ProfileFit:
    """Extract (delta_k_x, R_t, I1) from a measured |E(x)|^2 profile.

    Deep in the gap the standing-wave model degenerates; the fit then falls
    back to a plain exponential decay and reports kappa_x instead.
    """
    x = np.asarray(x_nm, dtype=float)
    y = np.asarray(intensity, dtype=float)
    if x.size < 20:
        raise InputError("need at least 20 profile samples")
    if np.ptp(y) < 1e-12 * max(abs(y).max(), 1e-300):
        raise FitIdentifiabilityError("flat profile; wave-vector not identifiable")
    if np.any(y <= 0):
        raise InputError("profile intensities must be positive")

    # band-model initialization: dominant oscillation frequency from the FFT
    # of the mean-subtracted profile
    dx = np.mean(np.diff(x))
    spec = np.abs(np.fft.rfft(y - y.mean()))
    freqs = np.fft.rfftfreq(y.size, d=dx)
    j = 1 + int(np.argmax(spec[1:]))
    dk0 = max(np.pi * freqs[j], 0.25 * np.pi / length_nm)
    contrast = (y.max() - y.min()) / (y.max() + y.min())
    r0 = min(max(contrast, 0.05), 0.95)
    init = np.array([dk0, r0, y.mean()])

    band = least_squares(lambda p: cavity_profile(x, *p, length_nm), y, init,
                         names=("delta_k_x", "r_t", "i_1"),
                         bounds=[(0.0, np.pi / dx), (0.0, 1.0), (1e-12, np.inf)])

    # gap branch: the same cavity form continued to an imaginary wave-vector
    slope, intercept = np.polyfit(x, np.log(y), 1)
    kap0 = max(-0.5 * slope, 0.1 / (x.max() - x.min()))
    gap = least_squares(lambda p: cavity_profile_gap(x, *p, length_nm), y,
                        np.array([kap0, 0.5, float(np.exp(intercept))]),
                        names=("kappa_x", "r_t", "i_1"),
                        bounds=[(0.0, np.inf), (0.0, 1.0), (1e-12, np.inf)])

    if band.converged and band.chi2 <= gap.chi2:
        return ProfileFit(delta_k_x=band.value("delta_k_x"), r_t=band.value("r_t"),
                          i_1=band.value("i_1"), regime="band", kappa_x=0.0,
                          report=band)
    return ProfileFit(delta_k_x=0.0, r_t=gap.value("r_t"), i_1=gap.value("i_1"),
                      regime="bandgap", kappa_x=gap.value("kappa_x"), report=gap)


# ---------------------------------------------------------------------------
# dispersion relation

@dataclass(frozen=True)
class DispersionFit:
    nu_be: float
    nu_be2: float
    zeta: float
    report: FitReport


def dispersion_delta_k(nu_thz, nu_be, nu_be2, zeta, a_nm):
    """Band-model wave-vector detuning below the edge (rad/nm)."""
    nu = np.asarray(nu_thz, dtype=float)
    denom = max(4.0 * zeta ** 2 - (nu_be2 - nu_be) ** 2, 1e-12)
    return (2.0 * np.pi / a_nm) * np.sqrt(np.clip((nu_be2 - nu) * (nu_be - nu), 0.0, None) / denom)


def fit_dispersion(points, a_nm: float) -> DispersionFit:
    """Band edge and curvature from (nu_THz, delta_k rad/nm) samples.

    All points must lie below the edge; in-gap rows mixed into the input are
    rejected (delta_k would rise with frequency there).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 6:
        raise InputError("need at least 6 (nu, delta_k) points below the edge")
    order = np.argsort(pts[:, 0])
    nu, dk = pts[order, 0], pts[order, 1]
    if np.any(dk <= 0):
        raise InputError("delta_k must be positive below the edge")
    if np.any(np.diff(dk) >= 0):
        raise InputError("delta_k must decrease toward the edge; "
                         "in-gap points must be separated out by the caller")

    # edge estimate: linear extrapolation of delta_k^2 to zero
    coef = np.polyfit(nu, dk ** 2, 1)
    nu_be0 = max(-coef[1] / coef[0], nu.max() + 1e-3)
    init = np.array([nu_be0, nu_be0 + 15.0, 300.0])
    report = least_squares(lambda p: dispersion_delta_k(nu, *p, a_nm), dk, init,
                           names=("nu_be", "nu_be2", "zeta"),
                           bounds=[(nu.max(), np.inf), (nu.max(), np.inf),
                                   (1.0, np.inf)])
    return DispersionFit(nu_be=report.value("nu_be"), nu_be2=report.value("nu_be2"),
                         zeta=report.value("zeta"), report=report)


# ---------------------------------------------------------------------------
# atomic spectra

def _dip_heuristics(det, t_rel):
    """Shared initialization: dip position, width and depth."""
    i_min = int(np.argmin(t_rel))
    delta_0 = -det[i_min]
    t_min = t_rel[i_min]
    depth = 1.0 - t_min
    half = t_min + 0.5 * depth
    below = t_rel <= half
    width = (det[below].max() - det[below].min()) if below.sum() > 1 else \
        2.0 * GAMMA_0_MHZ
    return delta_0, max(width, 1e-3), max(depth, 1e-3), t_min, i_min


def fit_te_spectrum(spectrum: Spectrum, n_bar: float) -> FitReport:
    """Fit the position/Poisson-averaged model to a TE spectrum.

    n_bar is supplied (from decay measurements), never co-fit: the product
    n_bar * Gamma_1D is degenerate.  Returns Gamma_1D, J_1D, Gamma'
    (Gamma_0 units) and delta_0 (MHz).
    """
    det = spectrum.detunings
    t_rel = spectrum.values
    if det.size < 15:
        raise InputError("need at least 15 detuning points for a TE fit")
    if n_bar <= 0:
        raise InputError("n_bar must be > 0 and fixed externally")
    spec = EnsembleSpec(n_bar=n_bar)

    delta_0, width, depth, t_min, i_min = _dip_heuristics(det, t_rel)
    gp0 = max(width / GAMMA_0_MHZ / 2.0, 0.2)
    # J = 0 closed form at the dip, with mean Bloch weight n_bar/2
    g1d0 = max(gp0 * (1.0 / np.sqrt(max(t_min, 1e-4)) - 1.0) / (0.5 * n_bar), 0.05)
    # asymmetry: a transparency wing on one side flags the sign of J
    right = t_rel[det > det[i_min]]
    left = t_rel[det < det[i_min]]
    skew = (right.mean() if right.size else 1.0) - (left.mean() if left.size else 1.0)
    j0 = -0.3 * g1d0 * np.sign(skew) if abs(skew) > 1e-3 else 0.0

    def model(p):
        rates = CouplingRates(gamma_1d=p[0], j_1d=p[1], gamma_prime=p[2], delta_0=p[3])
        return average_poisson(spec, rates, det).values

    return least_squares(model, t_rel, np.array([g1d0, j0, gp0, delta_0]),
                         sigma=spectrum.sigma,
                         names=("gamma_1d", "j_1d", "gamma_prime", "delta_0"),
                         bounds=[(0.0, 1e3), (-1e3, 1e3), (1e-4, 1e3), (-1e4, 1e4)])


def fit_tm_spectrum(spectrum: Spectrum, n_bar: float) -> FitReport:
    """Fit the optical-density model to a TM spectrum.

    Returns Gamma_1D^TM and Gamma' (Gamma_0 units) and delta_0 (MHz); the
    resonant OD is tied to them through 2 n_bar Gamma_TM / Gamma'.
    """
    det = spectrum.detunings
    t_rel = spectrum.values
    if det.size < 15:
        raise InputError("need at least 15 detuning points for a TM fit")
    if n_bar <= 0:
        raise InputError("n_bar must be > 0 and fixed externally")

    delta_0, width, depth, t_min, _ = _dip_heuristics(det, t_rel)
    gp0 = max(width / GAMMA_0_MHZ / 2.0, 0.2)
    od0 = max(-np.log(max(t_min, 1e-6)), 1e-4)
    gtm0 = od0 * gp0 / (2.0 * n_bar)

    def model(p):
        gtm, gp, d0 = p
        od = od_resonant(n_bar, gtm, gp)
        return od_transmission(det, od, (gtm + gp) * GAMMA_0_MHZ, d0)

    return least_squares(model, t_rel, np.array([gtm0, gp0, delta_0]),
                         sigma=spectrum.sigma,
                         names=("gamma_1d_tm", "gamma_prime", "delta_0"),
                         bounds=[(0.0, 1e3), (1e-4, 1e3), (-1e4, 1e4)])
