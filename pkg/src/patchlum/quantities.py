"""Physical constants, canonical units and small value types.

Canonical units used throughout the package:

=================  ==========
quantity           unit
=================  ==========
photon energy      meV
wavelength/length  um
time               s
current density    A/cm^2
power              W
=================  ==========

SI is only used inside formulas that mix fundamental constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import constants as _c

from .errors import DomainError

Q_E = _c.e            # elementary charge [C]
H = _c.h              # Planck constant [J s]
HBAR = _c.hbar        # reduced Planck constant [J s]
C = _c.c              # speed of light [m/s]

# h*c/e expressed in meV*um (1239.8419843...)
HC_MEV_UM = H * C / Q_E * 1e9

MEV_TO_J = 1e-3 * Q_E
UM3_TO_CM3 = 1e-12
UM2_TO_CM2 = 1e-8
NM_TO_CM = 1e-7


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


def _check_positive(name: str, value: float) -> float:
    value = _check_finite(name, value)
    if value <= 0:
        raise DomainError(f"{name} must be positive, got {value!r}")
    return value


def energy_to_wavelength(energy_mev: float) -> float:
    """Vacuum wavelength [um] of a photon of energy ``energy_mev`` [meV]."""
    return HC_MEV_UM / _check_positive("energy", energy_mev)


def wavelength_to_energy(wavelength_um: float) -> float:
    """Photon energy [meV] for a vacuum wavelength ``wavelength_um`` [um]."""
    return HC_MEV_UM / _check_positive("wavelength", wavelength_um)


@dataclass(frozen=True)
class Energy:
    """Photon or transition energy in meV."""

    meV: float

    def __post_init__(self):
        object.__setattr__(self, "meV", _check_finite("energy", self.meV))

    @property
    def joule(self) -> float:
        return self.meV * MEV_TO_J

    def to_wavelength(self) -> Wavelength:
        return Wavelength(energy_to_wavelength(self.meV))


@dataclass(frozen=True)
class Wavelength:
    """Vacuum wavelength in um."""

    um: float

    def __post_init__(self):
        object.__setattr__(self, "um", _check_positive("wavelength", self.um))

    def to_energy(self) -> Energy:
        return Energy(wavelength_to_energy(self.um))


@dataclass(frozen=True)
class Lifetime:
    """A lifetime in seconds; ``rate`` gives the reciprocal in 1/s."""

    s: float

    def __post_init__(self):
        object.__setattr__(self, "s", _check_positive("lifetime", self.s))

    @property
    def rate(self) -> float:
        return 1.0 / self.s

    @classmethod
    def from_rate(cls, rate: float) -> Lifetime:
        return cls(1.0 / _check_positive("rate", rate))


@dataclass(frozen=True)
class CurrentDensity:
    """Current density in A/cm^2 (non-negative)."""

    A_cm2: float

    def __post_init__(self):
        value = _check_finite("current density", self.A_cm2)
        if value < 0:
            raise DomainError(f"current density must be >= 0, got {value!r}")
        object.__setattr__(self, "A_cm2", value)

    @property
    def kA_cm2(self) -> float:
        return self.A_cm2 * 1e-3

    @classmethod
    def from_kA_cm2(cls, value: float) -> CurrentDensity:
        return cls(value * 1e3)
