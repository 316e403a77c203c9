"""Purcell coefficient, detuning Lorentzian and the drive-dependent Purcell factor.

The zero-detuning coefficient uses the harmonic combination of the emitter
and cavity quality factors while the detuning Lorentzian uses the plain sum
of their linewidths. The two conventions are kept side by side on purpose.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


def _scalar_or_array(out):
    return float(out) if np.ndim(out) == 0 else out


def combined_q(Q_EL: float, Q_cav: float) -> float:
    """Harmonic sum ``(1/Q_EL + 1/Q_cav)**-1``; ``math.inf`` is a valid input."""
    if not (Q_EL > 0 and Q_cav > 0):
        raise DomainError("quality factors must be positive")
    return 1.0 / (1.0 / Q_EL + 1.0 / Q_cav)


def total_linewidth(dE_EL: float, dE_cav: float) -> float:
    if dE_EL < 0 or dE_cav < 0 or dE_EL + dE_cav <= 0:
        raise DomainError("linewidths must be non-negative with a positive sum")
    return dE_EL + dE_cav


def lorentzian(detuning, width):
    """Unit-peak Lorentzian ``w**2 / (4 d**2 + w**2)`` of FWHM ``width``.

    An infinite width gives 1 everywhere.
    """
    if not width > 0:
        raise DomainError(f"linewidth must be positive, got {width!r}")
    d = np.asarray(detuning, dtype=float)
    if math.isinf(width):
        return _scalar_or_array(np.ones_like(d))  # transparent
    return _scalar_or_array(width * width / (4.0 * d * d + width * width))


def purcell_coefficient(Q: float, wavelength: float, n_mode: float, V_cav: float) -> float:
    """Peak Purcell enhancement ``3 Q (lambda/n)**3 / (4 pi**2 V)``.

    ``wavelength`` [um] and ``V_cav`` [um^3] only enter through the ratio,
    so any consistent length unit works.
    """
    for name, value in (("Q", Q), ("wavelength", wavelength), ("n_mode", n_mode), ("V_cav", V_cav)):
        if not (math.isfinite(value) and value > 0):
            raise DomainError(f"{name} must be positive and finite, got {value!r}")
    return 3.0 * Q * (wavelength / n_mode) ** 3 / (4.0 * math.pi**2 * V_cav)


def purcell_factor(F_P: float, detuning, width):
    """Detuned Purcell factor ``F_P * L(detuning, width)``; no angular correction."""
    if F_P < 0:
        raise DomainError("Purcell coefficient must be non-negative")
    return _scalar_or_array(F_P * np.asarray(lorentzian(detuning, width)))


@dataclass(frozen=True)
class DrivePurcell:
    """Purcell factor as a function of injected current density.

    Chains J -> terminal current (through the electrical area) -> bias
    (through the measured I-V table) -> Stark-shifted line -> detuning from
    the cavity mode -> Purcell factor.

    Parameters
    ----------
    emitter : StarkEmitter
    cavity : PatchCavity
    bias_map : BiasCurrentMap
    Q_EL : float, optional
        Emitter quality factor entering the coefficient; defaults to the
        mesa value of ``emitter`` at its reference bias.
    """

    emitter: object
    cavity: object
    bias_map: object
    Q_EL: float | None = None

    @property
    def mode(self):
        return self.cavity.mode()

    @property
    def coefficient(self) -> float:
        q_el = self.emitter.quality_factor() if self.Q_EL is None else self.Q_EL
        mode = self.mode
        Q = combined_q(q_el, mode.Q_cav)
        return purcell_coefficient(Q, mode.wavelength, self.cavity.n_mode, mode.V_cav)

    @property
    def linewidth(self) -> float:
        return total_linewidth(self.emitter.linewidth, self.mode.linewidth)

    def bias_at(self, J):
        """Bias [V] at current density ``J`` [A/cm^2]."""
        from .cavity import density_to_current

        return self.bias_map.bias_at(np.asarray(density_to_current(J, self.cavity)) * 1e3)

    def at_bias(self, V):
        delta = self.emitter.detuning(V, self.mode.E_cav)
        return purcell_factor(self.coefficient, delta, self.linewidth)

    def __call__(self, J):
        return self.at_bias(self.bias_at(J))

    def alignment_density(self) -> float:
        """Current density [A/cm^2] at which the line crosses the cavity mode."""
        from .cavity import current_to_density

        V = self.emitter.alignment_bias(self.mode.E_cav)
        return current_to_density(self.bias_map.current_at(V) * 1e-3, self.cavity)


def purcell_vs_drive(J, emitter, cavity, bias_map, Q_EL=None):
    """Purcell factor at current density ``J`` [A/cm^2] (scalar or array)."""
    return DrivePurcell(emitter, cavity, bias_map, Q_EL)(J)
