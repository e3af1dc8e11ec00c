"""Atoms coupled through a 1D photonic crystal waveguide band edge.

Forward models (band structure, collective transmission spectra, ensemble
averaging, superradiant decay) and the matching inference tools (damped
least-squares fitters, atom-number estimation), plus a CLI front end.
"""

from .decay import (DecayCurve, NbarReport, bessel_i_scaled, fit_nbar,
                    fit_single_exponential, intensity_n, poisson_average_rate)
from .ensemble import (EnsembleSpec, Spectrum, average_poisson,
                       average_positions, effective_ratio, od_resonant,
                       od_transmission, poisson_weights)
from .errors import (FitIdentifiabilityError, InputError, NumericError,
                     PcwError)
from .fitkit import (DispersionFit, FitReport, ProfileFit, fit_dispersion,
                     fit_intensity_profile, fit_te_spectrum, fit_tm_spectrum,
                     least_squares)
from .photonic1d import (BlochDispersion, BlochResult, GuidedRates,
                         LayerStack, antinode_position, band_edge,
                         bloch_analysis, cell_matrix, default_dispersion,
                         default_emitter_position, default_stack,
                         effective_length, field_profile, find_resonances,
                         greens_rates, stack_reflection, stack_transmission)
from .spinmodel import (AtomConfiguration, CouplingMatrix, CouplingRates,
                        CqedRates, build_coupling_matrix, cqed_rates,
                        eigenvalues, solve_coherences, transmission_bright,
                        transmission_exact)

__version__ = "0.1.0"
