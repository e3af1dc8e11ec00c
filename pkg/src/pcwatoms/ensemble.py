"""Ensemble averaging of transmission spectra.

Trapped atoms sample the Bloch function uniformly and their number follows a
Poisson distribution, so measured spectra are averages of the spin model over
both.  For the bright-mode form the average depends on positions only through
s = sum_j cos^2(pi x_j / a), which makes an iterated-convolution quadrature
possible; the exact model is averaged by seeded Monte Carlo.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InputError, NumericError
from .spinmodel import (AtomConfiguration, CouplingRates, CouplingMatrix,
                        _bright_from_weight, build_coupling_matrix,
                        transmission_exact)
from .units import GAMMA_0_MHZ

POISSON_TAIL = 1e-6

# Default quadrature resolution: bins of the single-atom cos^2 mass function
# and nodes of the per-N rebinned sum distribution.
QUAD_BINS = 512
QUAD_NODES = 128


@dataclass(frozen=True)
class Spectrum:
    """Relative transmission samples over a detuning grid."""

    detuning_mhz: tuple
    t_rel: tuple
    sigma: tuple = None
    mode: str = "TE"
    delta_be_ghz: float = None

    def __post_init__(self):
        d = np.asarray(self.detuning_mhz, dtype=float)
        t = np.asarray(self.t_rel, dtype=float)
        if d.shape != t.shape:
            raise InputError("detuning and transmission lengths differ")
        object.__setattr__(self, "detuning_mhz", tuple(d))
        object.__setattr__(self, "t_rel", tuple(t))
        if self.sigma is not None:
            s = np.asarray(self.sigma, dtype=float)
            if s.shape != d.shape:
                raise InputError("sigma length differs from detuning grid")
            object.__setattr__(self, "sigma", tuple(s))

    @property
    def detunings(self):
        return np.asarray(self.detuning_mhz)

    @property
    def values(self):
        return np.asarray(self.t_rel)


@dataclass(frozen=True)
class EnsembleSpec:
    """Atom-number statistics and position-averaging method."""

    n_bar: float
    position_method: str = "quadrature"
    samples: int = 100_000
    seed: int = None

    def __post_init__(self):
        if self.n_bar < 0 or not np.isfinite(self.n_bar):
            raise InputError(f"n_bar must be >= 0, got {self.n_bar}")
        if self.position_method not in ("quadrature", "monte-carlo"):
            raise InputError(f"unknown position method {self.position_method!r}")
        if self.position_method == "monte-carlo":
            if self.seed is None:
                raise InputError("monte-carlo averaging requires a seed")
            if self.samples < 1000:
                raise InputError("monte-carlo averaging needs >= 1000 samples")

    @property
    def n_max(self):
        return poisson_weights(self.n_bar).size - 1


def poisson_weights(n_bar: float, tail: float = POISSON_TAIL) -> np.ndarray:
    """Truncated, renormalized Poisson pmf over N = 0 .. n_max.

    n_max is the smallest N with cumulative mass > 1 - tail.
    """
    if n_bar == 0:
        return np.ones(1)
    w = [math.exp(-n_bar)]
    total = w[0]
    n = 0
    while total <= 1.0 - tail:
        n += 1
        w.append(math.exp(-n_bar + n * math.log(n_bar) - math.lgamma(n + 1)))
        total += w[-1]
        if n > 10_000:
            raise NumericError("Poisson truncation failed to converge")
    arr = np.asarray(w)
    return arr / arr.sum()


@lru_cache(maxsize=64)
def _cos2_mass(bins: int) -> tuple:
    """Exact mass of cos^2(pi*u), u uniform, in uniform bins over [0, 1].

    Uses the closed-form CDF P(c <= y) = 1 - (2/pi) * arccos(sqrt(y)).
    Returns (bin centers, masses).
    """
    edges = np.linspace(0.0, 1.0, bins + 1)
    cdf = 1.0 - (2.0 / np.pi) * np.arccos(np.sqrt(edges))
    return (0.5 * (edges[:-1] + edges[1:]), np.diff(cdf))


def _rebin(values, weights, lo, hi, nodes):
    """Mass- and mean-preserving rebin onto a uniform grid of `nodes` points."""
    grid = np.linspace(lo, hi, nodes)
    h = grid[1] - grid[0]
    pos = np.clip((values - lo) / h, 0.0, nodes - 1.0)
    j = np.minimum(pos.astype(int), nodes - 2)
    frac = pos - j
    out = np.zeros(nodes)
    np.add.at(out, j, weights * (1.0 - frac))
    np.add.at(out, j + 1, weights * frac)
    return grid, out


@lru_cache(maxsize=256)
def _bright_weight_nodes(n: int, bins: int = QUAD_BINS, nodes: int = QUAD_NODES) -> tuple:
    """Quadrature nodes/weights of s = sum of n iid cos^2 variables.

    Built by iterated discrete convolution of the single-atom mass function
    on a uniform lattice, then rebinned to a compact per-n grid.
    """
    if n == 0:
        return (np.zeros(1), np.ones(1))
    centers, mass = _cos2_mass(bins)
    f = mass.copy()
    for _ in range(n - 1):
        f = np.convolve(f, mass)
    h = centers[1] - centers[0]
    values = n * centers[0] + h * np.arange(f.size)
    grid, w = _rebin(values, f, 0.0, float(n), nodes)
    return (grid, w)


def _mc_positions(n: int, samples: int, seed: int, spread_nm: float) -> np.ndarray:
    """Stratified (per-atom Latin hypercube) positions, deterministic by seed.

    Counter-based bit generator keyed by the seed keeps draws reproducible
    regardless of evaluation order.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    u = np.empty((samples, n))
    for j in range(n):
        strata = (rng.permutation(samples) + rng.random(samples)) / samples
        u[:, j] = strata
    return (u - 0.5) * spread_nm


def average_positions(n: int, rates: CouplingRates, detunings_mhz, *,
                      kappa_x: float = 0.0, a: float = 370.0,
                      method: str = "quadrature", samples: int = 100_000,
                      seed: int = None, spread_nm: float = 12_000.0,
                      model: str = "bright") -> Spectrum:
    """Position-averaged |t/t0|^2 for a fixed atom number.

    quadrature mode integrates the bright-mode form over the distribution of
    s = sum cos^2 (iterated 1D convolution); monte-carlo mode samples
    positions uniformly over `spread_nm` and can average either the bright or
    the exact eigenvalue model (`model="exact"` requires kappa_x handling and
    is Monte Carlo only).
    """
    det = np.asarray(detunings_mhz, dtype=float)
    if n < 0:
        raise InputError(f"atom count must be >= 0, got {n}")
    if n == 0:
        return Spectrum(det, np.ones_like(det))

    if method == "quadrature":
        if model != "bright":
            raise InputError("quadrature averaging applies to the bright-mode "
                             "form only; use method='monte-carlo' for the exact model")
        s, w = _bright_weight_nodes(n)
        ratio = _bright_from_weight(det[:, None], rates, s[None, :])
        t2 = np.abs(ratio) ** 2
        return Spectrum(det, t2 @ w)

    if method != "monte-carlo":
        raise InputError(f"unknown averaging method {method!r}")
    if seed is None:
        raise InputError("monte-carlo averaging requires a seed (determinism)")

    x = _mc_positions(n, samples, seed, spread_nm)
    if model == "bright" or kappa_x == 0.0:
        s = np.sum(np.cos(np.pi * x / a) ** 2, axis=1)
        ratio = _bright_from_weight(det[:, None], rates, s[None, :])
        return Spectrum(det, np.mean(np.abs(ratio) ** 2, axis=1))
    if model != "exact":
        raise InputError(f"unknown model {model!r}")
    acc = np.zeros_like(det)
    for k in range(samples):
        config = AtomConfiguration(tuple(x[k]), kappa_x, a)
        matrix = build_coupling_matrix(rates, config)
        acc += np.abs(transmission_exact(det, rates, matrix)) ** 2
    return Spectrum(det, acc / samples)


def average_poisson(spec: EnsembleSpec, rates: CouplingRates, detunings_mhz, *,
                    kappa_x: float = 0.0, a: float = 370.0,
                    spread_nm: float = 12_000.0, model: str = "bright") -> Spectrum:
    """Transmission averaged over positions and Poisson atom number.

    This is the forward model fitted to TE spectra.
    """
    det = np.asarray(detunings_mhz, dtype=float)
    weights = poisson_weights(spec.n_bar)
    if spec.position_method == "quadrature":
        nodes = [_bright_weight_nodes(n) for n in range(weights.size)]
        s = np.concatenate([nd[0] for nd in nodes])
        w = np.concatenate([wN * nd[1] for wN, nd in zip(weights, nodes)])
        ratio = _bright_from_weight(det[:, None], rates, s[None, :])
        return Spectrum(det, np.abs(ratio) ** 2 @ w)

    total = weights[0] * np.ones_like(det)
    for n in range(1, weights.size):
        part = average_positions(n, rates, det, kappa_x=kappa_x, a=a,
                                 method="monte-carlo", samples=spec.samples,
                                 seed=spec.seed + n, spread_nm=spread_nm,
                                 model=model)
        total = total + weights[n] * part.values
    return Spectrum(det, total)


def od_transmission(detuning_mhz, od: float, linewidth_mhz: float,
                    delta_0_mhz: float) -> np.ndarray:
    """Optical-density model for the weakly coupled (TM) guided mode.

    T/T0 = exp(-OD / (1 + (2 (detuning + delta_0) / linewidth)^2)), with
    `linewidth` the total width Gamma_1D^TM + Gamma' in linear MHz.
    """
    if od < 0:
        raise InputError(f"optical density must be >= 0, got {od}")
    if linewidth_mhz <= 0:
        raise InputError(f"linewidth must be > 0, got {linewidth_mhz}")
    d = np.asarray(detuning_mhz, dtype=float) + delta_0_mhz
    return np.exp(-od / (1.0 + (2.0 * d / linewidth_mhz) ** 2))


def od_resonant(n_bar: float, gamma_tm: float, gamma_prime: float) -> float:
    """Resonant optical density 2 * n_bar * Gamma_1D^TM / Gamma' (rate units cancel)."""
    if gamma_prime <= 0:
        raise InputError("gamma_prime must be > 0")
    return 2.0 * n_bar * gamma_tm / gamma_prime


def effective_ratio(rates: CouplingRates, spec: EnsembleSpec, *,
                    grid_points: int = 401) -> float:
    """Bloch-averaging scale factor eta.

    Fits the unaveraged single-mode lineshape (total rate A, shift B) to the
    fully averaged spectrum and returns A / (n_bar * Gamma_1D); position
    averaging over cos^2 makes this come out well below 1.
    """
    from .fitkit import least_squares  # local import to avoid a module cycle

    if spec.n_bar <= 0:
        raise InputError("effective_ratio needs n_bar > 0")
    width = GAMMA_0_MHZ * (rates.gamma_prime
                           + spec.n_bar * (rates.gamma_1d + abs(rates.j_1d)))
    det = -rates.delta_0 + np.linspace(-6.0 * width, 6.0 * width, grid_points)
    target = average_poisson(spec, rates, det)

    def model(p):
        a_tot, b_shift, gp, d0 = p
        eff = CouplingRates(gamma_1d=max(a_tot, 0.0), j_1d=b_shift,
                            gamma_prime=max(gp, 1e-9), delta_0=d0)
        return np.abs(_bright_from_weight(det, eff, 1.0)) ** 2

    init = np.array([0.5 * spec.n_bar * rates.gamma_1d,
                     0.5 * spec.n_bar * rates.j_1d,
                     rates.gamma_prime, rates.delta_0])
    report = least_squares(model, target.values, init,
                           names=("a_total", "b_shift", "gamma_prime", "delta_0"),
                           bounds=[(0.0, np.inf), (-np.inf, np.inf),
                                   (1e-9, np.inf), (-np.inf, np.inf)])
    if not report.converged:
        raise NumericError("effective-ratio fit did not converge")
    return report.parameters["a_total"][0] / (spec.n_bar * rates.gamma_1d)
