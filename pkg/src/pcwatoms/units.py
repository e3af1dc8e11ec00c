"""Unit conventions and conversions.

All public APIs speak linear frequencies (MHz for atomic detunings, THz for
optical frequencies) and rates in units of the free-space decay rate of the
Cs D1 line.  Internal rate arithmetic is done in angular units (rad/us); the
functions below are the single conversion point.
"""

import numpy as np

# Free-space decay rate of the Cs D1 line, 2*pi x 4.56 MHz.
GAMMA_0_MHZ = 4.56

# Cs D1 transition frequency in THz.
NU_D1_THZ = 335.12

# Speed of light in nm * THz (= um * GHz etc.).
C_NM_THZ = 299_792.458

TWO_PI = 2.0 * np.pi


def mhz_to_angular(f):
    """Linear MHz -> angular rad/us."""
    return TWO_PI * np.asarray(f, dtype=float)


def angular_to_mhz(w):
    """Angular rad/us -> linear MHz."""
    return np.asarray(w, dtype=float) / TWO_PI


def gamma0_to_angular(x):
    """Rate in Gamma_0 units -> angular rad/us."""
    return np.asarray(x, dtype=float) * TWO_PI * GAMMA_0_MHZ


def angular_to_gamma0(w):
    """Angular rad/us -> rate in Gamma_0 units."""
    return np.asarray(w, dtype=float) / (TWO_PI * GAMMA_0_MHZ)
