"""Intersubband emitter: Stark-shifted line, mesa spectrum, cube-law lifetime."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .purcell import lorentzian


@dataclass(frozen=True)
class StarkEmitter:
    """Electroluminescence line with a linear Stark shift.

    ``E_EL(V) = E0 + kappa * (V - V0)``; the linewidth is bias independent.

    Parameters
    ----------
    E0 : float
        Peak energy at the reference bias [meV].
    V0 : float
        Reference bias [V].
    kappa : float
        Stark slope [meV/V].
    linewidth : float
        Mesa FWHM [meV].
    tau_sp : float
        Free-space spontaneous lifetime at ``E0`` [s].
    bias_range : tuple of float, optional
        Bias interval over which the Stark law was calibrated; evaluations
        outside it are reported by :meth:`is_extrapolated`.
    """

    E0: float = 130.0
    V0: float = 4.5
    kappa: float = 0.0
    linewidth: float = 130.0 / 9.0
    tau_sp: float = 50e-9
    bias_range: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.E0 > 0:
            raise DomainError(f"E0 must be positive, got {self.E0}")
        if not self.linewidth > 0:
            raise DomainError(f"linewidth must be positive, got {self.linewidth}")
        if not self.tau_sp > 0:
            raise DomainError(f"tau_sp must be positive, got {self.tau_sp}")

    @classmethod
    def from_quality_factor(cls, E0, Q_EL, **kwargs) -> StarkEmitter:
        """Build an emitter whose mesa line has quality factor ``Q_EL`` at ``E0``."""
        if not Q_EL > 0:
            raise DomainError(f"Q_EL must be positive, got {Q_EL}")
        return cls(E0=E0, linewidth=E0 / Q_EL, **kwargs)

    def el_peak_energy(self, V):
        """Peak energy [meV] at bias ``V`` (scalar or array)."""
        out = self.E0 + self.kappa * (np.asarray(V, dtype=float) - self.V0)
        return float(out) if out.ndim == 0 else out

    def quality_factor(self, V=None) -> float:
        """E_EL / linewidth at bias ``V`` (reference bias if omitted)."""
        energy = self.E0 if V is None else float(self.el_peak_energy(V))
        return energy / self.linewidth

    def is_extrapolated(self, V) -> bool:
        if self.bias_range is None:
            return False
        lo, hi = self.bias_range
        V = np.asarray(V, dtype=float)
        return bool(np.any((V < lo) | (V > hi)))

    def mesa_spectrum(self, V, energies):
        """Unit-peak Lorentzian at E_EL(V) with the mesa FWHM."""
        energies = np.asarray(energies, dtype=float)
        return lorentzian(energies - self.el_peak_energy(V), self.linewidth)

    def detuning(self, V, E_cav: float):
        """E_EL(V) - E_cav [meV]."""
        return self.el_peak_energy(V) - E_cav

    def alignment_bias(self, E_cav: float) -> float:
        """Bias at which the line is resonant with ``E_cav``."""
        if self.kappa == 0:
            raise DomainError("no Stark shift: alignment bias undefined")
        return self.V0 + (E_cav - self.E0) / self.kappa


def spontaneous_lifetime(energy, energy_ref, tau_ref):
    """Scale a spontaneous lifetime with the cube of the photon energy.

    ``tau(E) = tau_ref * (E_ref / E)**3``
    """
    energy = np.asarray(energy, dtype=float)
    if np.any(energy <= 0) or energy_ref <= 0 or tau_ref <= 0:
        raise DomainError("energies and reference lifetime must be positive")
    out = tau_ref * (energy_ref / energy) ** 3
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BiasCurrentMap:
    """Measured bias-current table with linear interpolation.

    Bias must be strictly increasing and current non-decreasing.
    Lookups outside the table are clamped to its end points.
    """

    bias_V: tuple = field(default=())
    current_mA: tuple = field(default=())

    def __post_init__(self):
        V = np.asarray(self.bias_V, dtype=float)
        I = np.asarray(self.current_mA, dtype=float)
        if V.ndim != 1 or V.shape != I.shape or V.size < 2:
            raise DomainError("bias/current table needs >= 2 matching rows")
        if not (np.all(np.isfinite(V)) and np.all(np.isfinite(I))):
            raise DomainError("bias/current table contains non-finite values")
        if np.any(np.diff(V) <= 0):
            raise DomainError("bias must be strictly increasing")
        if np.any(np.diff(I) < 0):
            raise DomainError("current must be non-decreasing with bias")
        if np.any(I < 0):
            raise DomainError("current must be non-negative")
        object.__setattr__(self, "bias_V", tuple(V.tolist()))
        object.__setattr__(self, "current_mA", tuple(I.tolist()))

    def current_at(self, V):
        """Current [mA] at bias ``V``."""
        out = np.interp(V, self.bias_V, self.current_mA)
        return float(out) if np.ndim(out) == 0 else out

    def bias_at(self, I_mA):
        """Bias [V] at current ``I_mA``; a flat segment maps to its highest bias."""
        V = np.asarray(self.bias_V)
        I = np.asarray(self.current_mA)
        # keep the last point of each flat run so the inverse is single valued
        keep = np.concatenate((np.diff(I) > 0, [True]))
        out = np.interp(I_mA, I[keep], V[keep])
        return float(out) if np.ndim(out) == 0 else out
