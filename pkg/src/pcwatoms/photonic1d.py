"""Effective 1D periodic-dielectric model of the waveguide.

A unit cell of lossless dielectric layers is analyzed with 2x2 transfer
matrices: Bloch bands from the cell trace, finite-crystal transmission and
field profiles from renormalized matrix sweeps, and guided-mode emitter
rates from the 1D Green's function built out of left/right outgoing
solutions.  The shipped default stack is calibrated so its fitted dispersion
matches the measured device (edge-to-first-resonance offset and band
curvature).
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import InputError, NumericError
from .units import C_NM_THZ

EDGE_TOL_THZ = 1e-6  # 1 MHz bisection tolerance for band-edge location


@dataclass(frozen=True)
class LayerStack:
    """Finite crystal: a repeated unit cell with optional mirrored tapers.

    cell and taper are tuples of (refractive index, thickness in nm); the
    taper is prepended as given and appended reversed.  n_outside is the
    index of the semi-infinite media on both sides.
    """

    cell: tuple
    n_cells: int
    taper: tuple = ()
    n_outside: float = 1.0

    def __post_init__(self):
        cell = tuple((float(n), float(d)) for n, d in self.cell)
        taper = tuple((float(n), float(d)) for n, d in self.taper)
        object.__setattr__(self, "cell", cell)
        object.__setattr__(self, "taper", taper)
        if not cell:
            raise InputError("unit cell needs at least one layer")
        for n, d in cell + taper:
            if d <= 0:
                raise InputError(f"layer thickness must be > 0, got {d}")
            if n < 1:
                raise InputError(f"refractive index must be >= 1, got {n}")
        if self.n_cells < 0:
            raise InputError(f"n_cells must be >= 0, got {self.n_cells}")
        if self.n_outside < 1:
            raise InputError(f"outside index must be >= 1, got {self.n_outside}")

    @property
    def a(self):
        """Lattice constant: the exact sum of unit-cell thicknesses."""
        return math.fsum(d for _, d in self.cell)

    @property
    def layers(self):
        """Flattened finite stack: taper + cells + mirrored taper."""
        return self.taper + self.cell * self.n_cells + self.taper[::-1]

    @property
    def length(self):
        """Total physical length of the flattened stack in nm."""
        return math.fsum(d for _, d in self.layers)

    @property
    def nominal_span(self):
        """(start, stop) of the nominal (non-taper) section in nm."""
        t = math.fsum(d for _, d in self.taper)
        return t, t + self.n_cells * self.a


def _layer_matrix(n, d, nu):
    """Characteristic matrix: [E, B](left) = M . [E, B](right), B = E'/(i k0)."""
    delta = 2.0 * np.pi * nu * n * d / C_NM_THZ
    c, s = np.cos(delta), np.sin(delta)
    return np.array([[c, 1j * s / n], [1j * n * s, c]])


def _check_frequency(nu):
    if not np.isfinite(nu) or nu <= 0:
        raise InputError(f"frequency must be finite and > 0 THz, got {nu}")


def cell_matrix(stack: LayerStack, nu_thz: float) -> np.ndarray:
    """Transfer matrix of one unit cell; det = 1 for lossless layers."""
    _check_frequency(nu_thz)
    m = np.eye(2, dtype=complex)
    for n, d in stack.cell:
        m = m @ _layer_matrix(n, d, nu_thz)
    return m


class BlochResult(NamedTuple):
    """Propagation constant at one frequency: delta_k or kappa in rad/nm."""

    in_gap: bool
    value: float


def bloch_analysis(stack: LayerStack, nu_thz: float) -> BlochResult:
    """Bloch wave-vector detuning (band) or attenuation constant (gap).

    cos(k a) equals half the cell-matrix trace; |trace/2| > 1 signals a gap
    with kappa = arccosh(|trace/2|) / a.  In a band the detuning from the
    zone edge, delta_k = pi/a - k, is returned.  Both vanish continuously at
    a band edge.
    """
    half_trace = float(cell_matrix(stack, nu_thz).trace().real) / 2.0
    a = stack.a
    if abs(half_trace) > 1.0:
        return BlochResult(True, math.acosh(abs(half_trace)) / a)
    return BlochResult(False, (math.pi - math.acos(half_trace)) / a)


def band_edge(stack: LayerStack, nu_lo: float, nu_hi: float) -> float:
    """Band-edge frequency: bisection on |trace/2| - 1 crossing within [lo, hi]."""
    def excess(nu):
        return abs(float(cell_matrix(stack, nu).trace().real) / 2.0) - 1.0

    f_lo, f_hi = excess(nu_lo), excess(nu_hi)
    if f_lo * f_hi > 0:
        raise InputError(f"no band edge bracketed in [{nu_lo}, {nu_hi}] THz")
    while nu_hi - nu_lo > EDGE_TOL_THZ:
        mid = 0.5 * (nu_lo + nu_hi)
        if excess(mid) * f_lo <= 0:
            nu_hi = mid
        else:
            nu_lo = mid
    return 0.5 * (nu_lo + nu_hi)


def _scaled_stack_matrix(stack: LayerStack, nu):
    """Total stack matrix with the magnitude factored out as log_scale.

    Deep in a gap the entries grow like exp(kappa * L); renormalizing after
    every layer keeps the product finite at any depth.
    """
    m = np.eye(2, dtype=complex)
    log_scale = 0.0
    for n, d in stack.layers:
        m = m @ _layer_matrix(n, d, nu)
        peak = np.max(np.abs(m))
        if peak > 1e100:
            m /= peak
            log_scale += np.log(peak)
    return m, log_scale


def _transmission_reflection(stack: LayerStack, nu):
    m, log_scale = _scaled_stack_matrix(stack, nu)
    n_io = stack.n_outside
    d1 = m[0, 0] + m[0, 1] * n_io
    d2 = m[1, 0] + m[1, 1] * n_io
    denom = n_io * d1 + d2
    t = (2.0 * n_io / denom) * np.exp(-log_scale)
    r = (n_io * d1 - d2) / denom
    return t, r


def stack_transmission(stack: LayerStack, nu_thz: float) -> complex:
    """Complex amplitude transmission t0 through the full finite stack."""
    _check_frequency(nu_thz)
    return complex(_transmission_reflection(stack, nu_thz)[0])


def stack_reflection(stack: LayerStack, nu_thz: float) -> complex:
    """Complex amplitude reflection of the full finite stack."""
    _check_frequency(nu_thz)
    return complex(_transmission_reflection(stack, nu_thz)[1])


def field_profile(stack: LayerStack, nu_thz: float, *,
                  samples_per_layer: int = 16) -> tuple:
    """Per-cell peak |E|^2 along the nominal section for unit input.

    Returns (x positions in nm, normalized intensities): the maximum sampled
    intensity within each nominal cell, normalized to the incident traveling
    wave (the waveguide value far from the edge).
    """
    _check_frequency(nu_thz)
    if stack.n_cells < 1:
        raise InputError("field profile needs at least one nominal cell")
    layers = stack.layers
    n_io = stack.n_outside
    k0 = 2.0 * np.pi * nu_thz / C_NM_THZ

    # backward sweep from the exit face; scale tracked in log space
    v = np.array([1.0, n_io], dtype=complex)
    log_scale = 0.0
    total = math.fsum(d for _, d in layers)
    xs, log_e2 = [], []
    x_right = total
    for n, d in reversed(layers):
        s = np.linspace(0.0, d, samples_per_layer, endpoint=False)
        # field at distance s left of the layer's right face
        delta = k0 * n * s
        e = np.cos(delta) * v[0] + 1j * np.sin(delta) * v[1] / n
        xs.append(x_right - s)
        log_e2.append(2.0 * (np.log(np.abs(e) + 1e-300) + log_scale))
        v = _layer_matrix(n, d, nu_thz) @ v
        peak = np.max(np.abs(v))
        if peak > 1e100:
            v /= peak
            log_scale += np.log(peak)
        x_right -= d
    # incident amplitude at the left face normalizes everything to unit input
    a_in = 0.5 * (v[0] + v[1] / n_io)
    log_in2 = 2.0 * (np.log(np.abs(a_in) + 1e-300) + log_scale)

    x = np.concatenate(xs[::-1])
    i_norm = np.concatenate(log_e2[::-1]) - log_in2

    lo, hi = stack.nominal_span
    a = stack.a
    x_cells, peaks = [], []
    for c in range(stack.n_cells):
        sel = (x >= lo + c * a) & (x < lo + (c + 1) * a)
        if not np.any(sel):
            continue
        x_cells.append(lo + (c + 0.5) * a)
        peaks.append(np.exp(np.clip(np.max(i_norm[sel]), -745.0, 700.0)))
    return np.asarray(x_cells), np.asarray(peaks)


def find_resonances(stack: LayerStack, nu_lo: float, nu_hi: float, *,
                    scan_ghz: float = 2.0) -> np.ndarray:
    """Frequencies of |t0|^2 maxima in [nu_lo, nu_hi], ascending.

    Grid scan followed by golden-section refinement of each bracketed peak.
    """
    npts = max(int((nu_hi - nu_lo) / (scan_ghz * 1e-3)), 16) + 1
    nus = np.linspace(nu_lo, nu_hi, npts)
    t2 = np.array([abs(stack_transmission(stack, nu)) ** 2 for nu in nus])
    peaks = []
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    for i in range(1, npts - 1):
        if t2[i] >= t2[i - 1] and t2[i] > t2[i + 1]:
            lo, hi = nus[i - 1], nus[i + 1]
            c = hi - inv_phi * (hi - lo)
            d = lo + inv_phi * (hi - lo)
            fc = -abs(stack_transmission(stack, c)) ** 2
            fd = -abs(stack_transmission(stack, d)) ** 2
            while hi - lo > 1e-7:
                if fc < fd:
                    hi, d, fd = d, c, fc
                    c = hi - inv_phi * (hi - lo)
                    fc = -abs(stack_transmission(stack, c)) ** 2
                else:
                    lo, c, fc = c, d, fd
                    d = lo + inv_phi * (hi - lo)
                    fd = -abs(stack_transmission(stack, d)) ** 2
            peaks.append(0.5 * (lo + hi))
    return np.asarray(peaks)


class GuidedRates(NamedTuple):
    """Guided-mode rates in Gamma_0 units at one frequency."""

    gamma_1d: float
    j_1d: float


def _self_green(stack: LayerStack, x_emitter: float, nu):
    """omega^2-weighted 1D self-Green's function at the emitter position.

    Built from the two outgoing solutions: psi_R satisfies a purely
    right-going wave beyond the stack, psi_L a left-going one; scale factors
    of both sweeps cancel in psi_L psi_R / W.
    """
    layers = stack.layers
    total = math.fsum(d for _, d in layers)
    if not 0.0 <= x_emitter <= total:
        raise InputError(f"emitter at {x_emitter} nm lies outside the stack "
                         f"[0, {total:.1f}] nm")
    k0 = 2.0 * np.pi * nu / C_NM_THZ
    n_io = stack.n_outside

    # right solution: sweep leftward from the exit face to the emitter
    v_r = np.array([1.0, n_io], dtype=complex)
    x_right = total
    for n, d in reversed(layers):
        if x_right - d <= x_emitter:
            s = x_right - x_emitter
            delta = k0 * n * s
            m = np.array([[np.cos(delta), 1j * np.sin(delta) / n],
                          [1j * n * np.sin(delta), np.cos(delta)]])
            v_r = m @ v_r
            break
        v_r = _layer_matrix(n, d, nu) @ v_r
        peak = np.max(np.abs(v_r))
        if peak > 1e100:
            v_r /= peak
        x_right -= d

    # left solution: sweep rightward from the entrance face
    v_l = np.array([1.0, -n_io], dtype=complex)
    x_left = 0.0
    for n, d in layers:
        if x_left + d >= x_emitter:
            s = x_emitter - x_left
            delta = k0 * n * s
            m = np.array([[np.cos(delta), -1j * np.sin(delta) / n],
                          [-1j * n * np.sin(delta), np.cos(delta)]])
            v_l = m @ v_l
            break
        m = _layer_matrix(n, d, nu)
        # inverse of the layer matrix = propagation by -d
        v_l = np.array([[m[0, 0], -m[0, 1]], [-m[1, 0], m[1, 1]]]) @ v_l
        peak = np.max(np.abs(v_l))
        if peak > 1e100:
            v_l /= peak
        x_left += d

    wronskian = 1j * k0 * (v_l[0] * v_r[1] - v_l[1] * v_r[0])
    if wronskian == 0:
        raise NumericError("degenerate Green's-function solutions")
    g = -nu * nu * v_l[0] * v_r[0] / wronskian
    # Spin-model sign convention: the collective resonance sits at detuning
    # -J, and an emitter above the dielectric band is pushed up by it (the
    # gap-side shift has J < 0).  That fixes the sign of the real part.
    return complex(-g.real, g.imag)


@lru_cache(maxsize=256)
def _green_calibration(stack: LayerStack, x_emitter: float, nu_ref: float,
                       gamma_ref: float) -> float:
    im = 2.0 * float(np.imag(_self_green(stack, x_emitter, nu_ref)))
    if im <= 0:
        raise NumericError(f"non-radiative reference point at {nu_ref} THz")
    return gamma_ref / im


def greens_rates(stack: LayerStack, x_emitter_nm: float, nu_thz: float,
                 gamma_ref: float, nu_ref_thz: float) -> GuidedRates:
    """Guided-mode decay rate and frequency shift of one emitter.

    Gamma_1D is twice the imaginary part of the self-Green's function and
    J_1D its real part, with one global constant calibrated so that
    Gamma_1D(nu_ref) = gamma_ref (Gamma_0 units) at the same position.
    The emitter should sit at a Bloch-function antinode (peak-rate
    convention); see antinode_position.
    """
    _check_frequency(nu_thz)
    _check_frequency(nu_ref_thz)
    scale = _green_calibration(stack, float(x_emitter_nm), float(nu_ref_thz),
                               float(gamma_ref))
    g = _self_green(stack, float(x_emitter_nm), nu_thz)
    return GuidedRates(gamma_1d=scale * 2.0 * float(np.imag(g)),
                       j_1d=scale * float(np.real(g)))


def antinode_position(stack: LayerStack, nu_thz: float, *,
                      scan_points: int = 200) -> float:
    """Emitter position with peak guided decay inside the central cell."""
    lo, hi = stack.nominal_span
    a = stack.a
    mid = stack.n_cells // 2
    x_grid = np.linspace(lo + mid * a, lo + (mid + 1) * a, scan_points,
                         endpoint=False)
    im = [float(np.imag(_self_green(stack, x, nu_thz))) for x in x_grid]
    return float(x_grid[int(np.argmax(im))])


# ---------------------------------------------------------------------------
# analytic band-model dispersion

@dataclass(frozen=True)
class BlochDispersion:
    """Two-edge band model: maps detuning to delta_k (band) or kappa (gap)."""

    nu_be: float
    nu_be2: float
    zeta: float
    a: float

    def __post_init__(self):
        if not self.nu_be < self.nu_be2:
            raise InputError("nu_be must lie below nu_be2")
        if 4.0 * self.zeta ** 2 <= (self.nu_be2 - self.nu_be) ** 2:
            raise InputError("curvature too small: need 4 zeta^2 > gap width^2")
        if self.a <= 0:
            raise InputError("lattice constant must be > 0")

    def _denom(self):
        return 4.0 * self.zeta ** 2 - (self.nu_be2 - self.nu_be) ** 2

    def delta_k_x(self, nu_thz):
        """Wave-vector detuning from the zone edge below nu_be (rad/nm)."""
        nu = np.asarray(nu_thz, dtype=float)
        arg = (self.nu_be2 - nu) * (self.nu_be - nu) / self._denom()
        return (2.0 * np.pi / self.a) * np.sqrt(np.clip(arg, 0.0, None))

    def kappa_x(self, nu_thz):
        """Attenuation constant inside the gap (rad/nm)."""
        nu = np.asarray(nu_thz, dtype=float)
        arg = (self.nu_be2 - nu) * (nu - self.nu_be) / self._denom()
        return (2.0 * np.pi / self.a) * np.sqrt(np.clip(arg, 0.0, None))


def effective_length(stack: LayerStack, nu_first: float) -> float:
    """Effective crystal length in nm from the first-resonance condition.

    The n-th transmission peak below the edge sits where delta_k = n pi / L
    including field penetration into the tapers, so L = pi / delta_k(nu_1).
    """
    res = bloch_analysis(stack, nu_first)
    if res.in_gap or res.value <= 0:
        raise InputError(f"{nu_first} THz is not a propagating resonance")
    return math.pi / res.value


# ---------------------------------------------------------------------------
# calibrated default device

# Unit cell: one dielectric slab plus an air slot, solved so the fitted
# dispersion of the cell reproduces the measured band curvature and gap width
# (zeta = 227 THz, width 14.6 THz) and the in-gap attenuation at +60 GHz.
DEFAULT_N_HI = 1.8427867664
DEFAULT_SLOT_NM = 32.8661470106
DEFAULT_A_NM = 370.0
DEFAULT_N_CELLS = 150
DEFAULT_TAPER_CELLS = 30
# Taper profile exponent: sets the field penetration into the tapers and
# thereby the edge-to-first-resonance offset (133 GHz at 3.2).
DEFAULT_TAPER_EXPONENT = 3.2

# Frozen observables of the default stack, verified by the test suite.
DEFAULT_NU_BE_THZ = 219.932322
DEFAULT_NU_1_THZ = 219.799455
DEFAULT_GAMMA_REF = 1.5  # peak guided rate at nu_1, Gamma_0 units


@lru_cache(maxsize=8)
def default_stack(n_cells: int = DEFAULT_N_CELLS) -> LayerStack:
    """The calibrated slab-and-slot crystal with smooth slot tapers."""
    slab = DEFAULT_A_NM - DEFAULT_SLOT_NM
    taper = []
    for i in range(1, DEFAULT_TAPER_CELLS + 1):
        s = DEFAULT_SLOT_NM * (i / (DEFAULT_TAPER_CELLS + 1.0)) ** DEFAULT_TAPER_EXPONENT
        taper += [(DEFAULT_N_HI, DEFAULT_A_NM - s), (1.0, s)]
    return LayerStack(cell=((DEFAULT_N_HI, slab), (1.0, DEFAULT_SLOT_NM)),
                      n_cells=n_cells, taper=tuple(taper), n_outside=DEFAULT_N_HI)


def default_emitter_position(stack: LayerStack = None) -> float:
    """Center of the central high-index slab: the Bloch-function antinode."""
    st = stack if stack is not None else default_stack()
    lo, _ = st.nominal_span
    slab = st.cell[0][1]
    return lo + (st.n_cells // 2) * st.a + 0.5 * slab


def default_dispersion() -> BlochDispersion:
    """Band model fitted to the default stack (see the test suite)."""
    return BlochDispersion(nu_be=DEFAULT_NU_BE_THZ,
                           nu_be2=DEFAULT_NU_BE_THZ + 14.600,
                           zeta=227.0, a=DEFAULT_A_NM)
