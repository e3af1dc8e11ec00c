"""Green's-function spin model for N atoms coupled through a waveguide.

Atoms are two-level pseudo-spins driven through a guided mode.  Their
steady-state coherences obey a linear system whose coupling matrix has
elements g_ij = J + i*Gamma/2 modulated by the Bloch function and by the
evanescent envelope, and the relative transmission follows from the complex
eigenvalues of that matrix.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NumericError
from .units import gamma0_to_angular, mhz_to_angular


@dataclass(frozen=True)
class CouplingRates:
    """Peak single-atom coupling rates.

    gamma_1d, j_1d and gamma_prime are in units of Gamma_0; delta_0 is the
    common line shift (AC Stark + Lamb) in linear MHz.
    """

    gamma_1d: float
    j_1d: float
    gamma_prime: float
    delta_0: float = 0.0

    def __post_init__(self):
        vals = (self.gamma_1d, self.j_1d, self.gamma_prime, self.delta_0)
        if not all(np.isfinite(v) for v in vals):
            raise InputError(f"coupling rates must be finite, got {vals}")
        if self.gamma_1d < 0:
            raise InputError(f"gamma_1d must be >= 0, got {self.gamma_1d}")
        if self.gamma_prime <= 0:
            raise InputError(f"gamma_prime must be > 0, got {self.gamma_prime}")


@dataclass(frozen=True)
class AtomConfiguration:
    """Atom positions along the waveguide axis.

    positions are in nm, kappa_x (field attenuation constant) in rad/nm and
    a is the lattice constant in nm.
    """

    positions: tuple
    kappa_x: float
    a: float

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        object.__setattr__(self, "positions", tuple(pos))
        if pos.size and not np.all(np.isfinite(pos)):
            raise InputError("atom positions must be finite")
        if not np.isfinite(self.kappa_x) or self.kappa_x < 0:
            raise InputError(f"kappa_x must be >= 0, got {self.kappa_x}")
        if self.a <= 0:
            raise InputError(f"lattice constant must be > 0, got {self.a}")

    @property
    def n(self):
        return len(self.positions)


class CouplingMatrix:
    """Complex symmetric coupling matrix with its eigenvalue list.

    Entries are stored in angular units (rad/us); they are built from rates
    given in Gamma_0 units at the API boundary.
    """

    def __init__(self, g: np.ndarray):
        g = np.asarray(g, dtype=complex)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise InputError(f"coupling matrix must be square, got {g.shape}")
        if not np.all(np.isfinite(g)):
            raise InputError("coupling matrix entries must be finite")
        self.g = g
        self._eigenvalues = None

    @property
    def n(self):
        return self.g.shape[0]

    @property
    def eigenvalues(self):
        if self._eigenvalues is None:
            self._eigenvalues = eigenvalues(self)
        return self._eigenvalues


def build_coupling_matrix(rates: CouplingRates, config: AtomConfiguration) -> CouplingMatrix:
    """Bandgap coupling matrix g_ij = (J + i*G/2) cos_i cos_j exp(-k|xi-xj|).

    The cosine factors are the Bloch-function envelope cos(pi x / a); the
    exponential carries the finite interaction range 1/kappa_x.  The result
    is exactly symmetric by construction.
    """
    x = np.asarray(config.positions, dtype=float)
    g_unit = gamma0_to_angular(rates.j_1d) + 0.5j * gamma0_to_angular(rates.gamma_1d)
    cos = np.cos(np.pi * x / config.a)
    envelope = np.exp(-config.kappa_x * np.abs(x[:, None] - x[None, :]))
    return CouplingMatrix(g_unit * np.outer(cos, cos) * envelope)


def eigenvalues(matrix: CouplingMatrix) -> np.ndarray:
    """Full complex spectrum of the coupling matrix.

    The matrix is complex symmetric (not Hermitian), so a general dense
    solver is used.  Ordering is descending |lambda|, ties broken by
    descending real part, which makes results reproducible.
    """
    if matrix.n == 0:
        return np.zeros(0, dtype=complex)
    try:
        lam = np.linalg.eigvals(matrix.g)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed to converge on\n{matrix.g!r}") from exc
    order = np.lexsort((-lam.real, -np.abs(lam)))
    return lam[order]


def _shifted_detuning(detuning_mhz, rates: CouplingRates):
    """Angular probe detuning including the common line shift delta_0."""
    return mhz_to_angular(np.asarray(detuning_mhz, dtype=float) + rates.delta_0)


def solve_coherences(matrix: CouplingMatrix, detuning_mhz: float,
                     rates: CouplingRates, drive) -> np.ndarray:
    """Steady-state coherences from the linear system of the spin model.

    Solves (Delta' + i Gamma'/2) sigma_i + sum_j g_ij sigma_j = -Omega_i
    for a single scalar detuning (MHz) and complex drive vector Omega.
    """
    drive = np.asarray(drive, dtype=complex)
    if drive.shape != (matrix.n,):
        raise InputError(
            f"drive length {drive.shape} does not match atom count {matrix.n}")
    if matrix.n == 0:
        return np.zeros(0, dtype=complex)
    diag = _shifted_detuning(detuning_mhz, rates) + 0.5j * gamma0_to_angular(rates.gamma_prime)
    A = matrix.g + diag * np.eye(matrix.n)
    try:
        sigma = np.linalg.solve(A, -drive)
    except np.linalg.LinAlgError as exc:
        raise NumericError("singular spin-model system (detuning hits a "
                           f"collective resonance exactly): diag={diag}") from exc
    residual = np.linalg.norm(A @ sigma + drive)
    scale = max(np.linalg.norm(drive), 1e-300)
    if not np.isfinite(residual) or residual > 1e-8 * scale:
        raise NumericError(f"ill-conditioned spin-model solve, residual {residual:.3e}")
    return sigma


def transmission_exact(detuning_mhz, rates: CouplingRates,
                       matrix: CouplingMatrix) -> np.ndarray:
    """Relative transmission t/t0 from the eigenvalue product formula.

    Accepts a scalar or array of detunings in MHz and returns the complex
    ratio; spectra report |t/t0|^2.
    """
    delta = _shifted_detuning(detuning_mhz, rates)
    d0 = delta + 0.5j * gamma0_to_angular(rates.gamma_prime)
    ratio = np.ones_like(d0, dtype=complex)
    for lam in matrix.eigenvalues:
        ratio = ratio * d0 / (d0 + lam)
    return ratio


def _bright_from_weight(detuning_mhz, rates: CouplingRates, weight):
    """Single-bright-mode ratio for total Bloch weight s = sum cos^2."""
    delta = _shifted_detuning(detuning_mhz, rates)
    w = np.asarray(weight, dtype=float)
    d0 = delta + 0.5j * gamma0_to_angular(rates.gamma_prime)
    shift = w * (gamma0_to_angular(rates.j_1d) + 0.5j * gamma0_to_angular(rates.gamma_1d))
    return d0 / (d0 + shift)


def transmission_bright(detuning_mhz, rates: CouplingRates,
                        config: AtomConfiguration) -> np.ndarray:
    """Single-bright-mode transmission using only the diagonal couplings.

    Exact when kappa_x = 0 (separable matrix with one non-zero eigenvalue);
    a controlled approximation for kappa_x * spread << 1.
    """
    cos2 = np.cos(np.pi * np.asarray(config.positions) / config.a) ** 2
    return _bright_from_weight(detuning_mhz, rates, float(np.sum(cos2)))


@dataclass(frozen=True)
class CqedRates:
    """Cavity-QED comparator rates at one cavity detuning."""

    j_1d: float
    gamma_1d: float
    ratio_defined: bool = True

    @property
    def ratio(self):
        """Dissipative-to-coherent ratio Gamma_1D / J_1D."""
        if not self.ratio_defined:
            return np.nan
        return self.gamma_1d / self.j_1d


def cqed_rates(delta_c_ghz: float, gamma_c_ghz: float, peak: float) -> CqedRates:
    """Lorentzian cavity model: J and Gamma versus detuning from resonance.

    J falls off as delta/(1 + delta^2/gamma_c^2) and Gamma as a Lorentzian,
    so Gamma/J = gamma_c/delta_c at every non-zero detuning.  peak sets
    Gamma at delta_c = 0 (Gamma_0 units).
    """
    if gamma_c_ghz <= 0 or not np.isfinite(gamma_c_ghz):
        raise InputError(f"cavity linewidth must be > 0, got {gamma_c_ghz}")
    lorentz = 1.0 / (1.0 + (delta_c_ghz / gamma_c_ghz) ** 2)
    gamma = peak * lorentz
    if delta_c_ghz == 0.0:
        return CqedRates(j_1d=0.0, gamma_1d=gamma, ratio_defined=False)
    j = peak * (delta_c_ghz / gamma_c_ghz) * lorentz
    return CqedRates(j_1d=j, gamma_1d=gamma)
