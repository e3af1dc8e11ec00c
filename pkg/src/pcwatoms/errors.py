"""Exception hierarchy shared by all modules.

Input problems and numerical failures are kept distinct so the CLI can map
them to different exit codes (2 and 3 respectively).
"""


class PcwError(Exception):
    """Base class for all package errors."""


class InputError(PcwError):
    """Invalid argument, configuration value or malformed data file."""


class NumericError(PcwError):
    """A numerical routine failed (singular system, non-convergence, ...)."""


class FitIdentifiabilityError(NumericError):
    """The data cannot constrain the requested fit parameters."""
