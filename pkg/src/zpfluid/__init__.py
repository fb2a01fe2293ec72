"""Zero-point density fluctuations in a fluid probed by light scattering."""

__version__ = "0.1.0"

from .errors import (ConfigError, NumericalError, RegimeError, UnsupportedModeError,  # noqa: E402
                     ValidationError, ZPFError)
from .physmodel import (CODATA, FluidMedium, PhysicalConstants, ProbePulse,  # noqa: E402
                        he3_preset, photon_number, pulse_duration)
from .sampling import SamplingPair, SamplingProfile, combined_I  # noqa: E402

__all__ = [
    "CODATA", "ConfigError", "FluidMedium", "NumericalError", "PhysicalConstants",
    "ProbePulse", "RegimeError", "SamplingPair", "SamplingProfile", "UnsupportedModeError",
    "ValidationError", "ZPFError", "combined_I", "he3_preset", "photon_number",
    "pulse_duration",
]
