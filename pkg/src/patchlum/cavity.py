"""Patch-antenna microcavity: geometry, fundamental mode and areas."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .purcell import lorentzian
from .quantities import UM2_TO_CM2, wavelength_to_energy

# s = 1.4 um resonant at 10 um
DEFAULT_MODE_INDEX = 10.0 / (2 * 1.4)


def _positive(name, value):
    if not np.isfinite(value) or value <= 0:
        raise DomainError(f"{name} must be positive, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class PatchCavity:
    """Square metal-semiconductor-metal patch resonators on a square lattice.

    Parameters
    ----------
    s : float
        Lateral patch size [um].
    H : float
        Semiconductor thickness between the metal plates [um].
    p : float
        Array period [um].
    Nx, Ny : int
        Number of patches along x and y.
    n_mode : float
        Modal refractive index of the fundamental patch mode.
    Q_cav : float
        Quality factor of the fundamental mode.
    """

    s: float = 1.4
    H: float = 0.75
    p: float = 7.0
    Nx: int = 10
    Ny: int = 10
    n_mode: float = DEFAULT_MODE_INDEX
    Q_cav: float = 14.4

    def __post_init__(self):
        _positive("s", self.s)
        _positive("H", self.H)
        _positive("p", self.p)
        _positive("Q_cav", self.Q_cav)
        if self.s > self.p:
            raise DomainError(f"patch size s={self.s} exceeds period p={self.p}")
        if int(self.Nx) != self.Nx or int(self.Ny) != self.Ny or self.Nx < 1 or self.Ny < 1:
            raise DomainError(f"Nx, Ny must be integers >= 1, got {self.Nx}, {self.Ny}")
        if not self.n_mode > 1:
            raise DomainError(f"n_mode must exceed 1, got {self.n_mode}")

    @property
    def n_patches(self) -> int:
        return int(self.Nx) * int(self.Ny)

    def mode(self) -> CavityMode:
        res = resonance(self.s, self.n_mode)
        return CavityMode(
            E_cav=res.energy,
            Q_cav=self.Q_cav,
            wavelength=res.wavelength,
            V_cav=mode_volume(self.s, self.H),
        )


@dataclass(frozen=True)
class CavityMode:
    """Fundamental mode: energy [meV], Q, wavelength [um], volume [um^3]."""

    E_cav: float
    Q_cav: float
    wavelength: float
    V_cav: float

    def __post_init__(self):
        for name in ("E_cav", "Q_cav", "wavelength", "V_cav"):
            _positive(name, getattr(self, name))

    @property
    def linewidth(self) -> float:
        """FWHM of the mode, E_cav / Q_cav [meV]."""
        return self.E_cav / self.Q_cav


class Resonance(NamedTuple):
    wavelength: float
    energy: float


def resonance(s: float, n_mode: float) -> Resonance:
    """Half-wave patch resonance: wavelength 2*n*s [um] and its energy [meV]."""
    wavelength = 2.0 * _positive("n_mode", n_mode) * _positive("s", s)
    return Resonance(wavelength, wavelength_to_energy(wavelength))


def mode_index_from_resonance(s: float, wavelength: float) -> float:
    """Modal index that makes a patch of size ``s`` resonant at ``wavelength``."""
    return _positive("wavelength", wavelength) / (2.0 * _positive("s", s))


def mode_volume(s: float, H: float) -> float:
    """Physical metal-metal volume s^2 H [um^3]."""
    return _positive("s", s) ** 2 * _positive("H", H)


def electrical_area(cavity: PatchCavity) -> float:
    """Total injected area of the array [um^2]."""
    return cavity.n_patches * cavity.s**2


def optical_area(cavity: PatchCavity) -> float:
    """Total collection area of the array [um^2]."""
    return cavity.n_patches * cavity.p**2


def fill_factor(cavity: PatchCavity) -> float:
    return cavity.s**2 / cavity.p**2


def current_to_density(current_A, cavity: PatchCavity):
    """Convert a terminal current [A] into a current density [A/cm^2]."""
    current_A = np.asarray(current_A, dtype=float)
    if np.any(current_A < 0):
        raise DomainError("current must be non-negative")
    out = current_A / (electrical_area(cavity) * UM2_TO_CM2)
    return float(out) if out.ndim == 0 else out


def density_to_current(J_A_cm2, cavity: PatchCavity):
    """Inverse of :func:`current_to_density`; returns amperes."""
    J_A_cm2 = np.asarray(J_A_cm2, dtype=float)
    if np.any(J_A_cm2 < 0):
        raise DomainError("current density must be non-negative")
    out = J_A_cm2 * electrical_area(cavity) * UM2_TO_CM2
    return float(out) if out.ndim == 0 else out


def reflectivity_spectrum(mode: CavityMode, depth: float, energies):
    """Single-Lorentzian reflectivity dip R(E) = 1 - depth * L(E - E_cav).

    The dip FWHM equals the mode linewidth E_cav / Q_cav.
    """
    if not 0.0 <= depth <= 1.0:
        raise DomainError(f"depth must lie in [0, 1], got {depth!r}")
    energies = np.asarray(energies, dtype=float)
    return 1.0 - depth * lorentzian(energies - mode.E_cav, mode.linewidth)
