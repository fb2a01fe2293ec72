"""Physical constants, the probed fluid, the probe pulse, and the He-3 preset.

All quantities are SI unless a caller deliberately rescales every input
(including the constants) into another consistent unit system.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .errors import ValidationError

NARROWBAND_RATIO = 0.05


def _positive(owner: str, **values: float) -> None:
    for name, v in values.items():
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise ValidationError(f"{owner}.{name} must be a positive finite number, got {v!r}")


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.054571817e-34  # J s
    c: float = 2.99792458e8  # m/s
    kB: float = 1.380649e-23  # J/K

    def __post_init__(self):
        _positive("constants", hbar=self.hbar, c=self.c, kB=self.kB)

    def to_dict(self) -> dict:
        return asdict(self)


CODATA = PhysicalConstants()


@dataclass(frozen=True)
class FluidMedium:
    """Liquid being probed.

    ``eta`` may equal 1 here; thermal comparisons reject it later because the
    factor (eta^2 - 1)^-2 has a pole there. ``light_speed`` is only used for
    the sound-slower-than-light check and defaults to the CODATA value.
    """

    cs: float
    rho0: float
    eta: float
    temperature: float = 0.0
    atomic_scale: float = 1e-10
    light_speed: float = field(default=CODATA.c, repr=False, compare=False)

    def __post_init__(self):
        _positive("fluid", cs=self.cs, rho0=self.rho0, atomic_scale=self.atomic_scale)
        if not (math.isfinite(self.eta) and self.eta >= 1.0):
            raise ValidationError(f"fluid.eta must be >= 1, got {self.eta!r}")
        if not (math.isfinite(self.temperature) and self.temperature >= 0.0):
            raise ValidationError(f"fluid.temperature must be >= 0, got {self.temperature!r}")
        if not self.cs < self.light_speed / self.eta:
            raise ValidationError("fluid.cs must be below the light speed in the medium c/eta")

    def with_constants(self, constants: PhysicalConstants) -> "FluidMedium":
        return FluidMedium(self.cs, self.rho0, self.eta, self.temperature,
                           self.atomic_scale, light_speed=constants.c)

    def to_dict(self) -> dict:
        return {"cs": self.cs, "rho0": self.rho0, "eta": self.eta,
                "temperature": self.temperature, "atomic_scale": self.atomic_scale}


@dataclass(frozen=True)
class ProbePulse:
    energy: float
    lambda0: float
    ell: float

    def __post_init__(self):
        _positive("pulse", energy=self.energy, lambda0=self.lambda0, ell=self.ell)

    def narrowband_ok(self, threshold: float = NARROWBAND_RATIO) -> bool:
        """True when lambda0/ell <= threshold (packet much longer than a wavelength)."""
        return self.lambda0 / self.ell <= threshold

    def replace(self, **changes) -> "ProbePulse":
        d = self.to_dict()
        d.update(changes)
        return ProbePulse(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def pulse_duration(pulse: ProbePulse, medium: FluidMedium,
                   constants: PhysicalConstants = CODATA) -> float:
    """Time for the packet to cross its own length in the fluid, tau = eta * ell / c."""
    return medium.eta * pulse.ell / constants.c


def photon_number(pulse: ProbePulse, constants: PhysicalConstants = CODATA) -> float:
    return pulse.energy * pulse.lambda0 / (2.0 * math.pi * constants.hbar * constants.c)


def regime_ratio(medium: FluidMedium, ell: float, tau: float) -> float:
    """ell / (cs tau): how far the sampling region outruns sound."""
    return ell / (medium.cs * tau)


def he3_preset() -> tuple[FluidMedium, ProbePulse]:
    """Normal liquid He-3 near 0.1 K, 1 uJ pulse at 1 um, 400 um packet."""
    medium = FluidMedium(cs=200.0, rho0=83.0, eta=1.026, temperature=0.1)
    pulse = ProbePulse(energy=1e-6, lambda0=1e-6, ell=4e-4)
    return medium, pulse
