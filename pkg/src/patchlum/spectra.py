"""Cavity-filtered electroluminescence and linewidth narrowing."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import half_max_crossings
from .errors import AnalysisError, ConfigError
from .purcell import lorentzian

MIN_GRID_POINTS = 2000
MIN_GRID_SPAN = 10.0  # half-span in combined linewidths


@dataclass(frozen=True)
class EmissionSpectrum:
    energy: np.ndarray
    intensity: np.ndarray
    peak_energy: float
    fwhm: float

    @property
    def quality_factor(self) -> float:
        return self.peak_energy / self.fwhm


def energy_grid(center: float, width: float, n: int = 4001, span: float = 20.0):
    """Uniform grid of ``n`` points covering ``center +/- span*width``."""
    return np.linspace(center - span * width, center + span * width, n)


def _peak_energy(x, y, k):
    # vertex of the parabola through the three samples around the maximum
    if 0 < k < len(y) - 1:
        y0, y1, y2 = y[k - 1], y[k], y[k + 1]
        denom = y0 - 2 * y1 + y2
        if denom < 0:
            return float(x[k] + 0.5 * (y0 - y2) / denom * (x[k + 1] - x[k]))
    return float(x[k])


def analyse(energies, intensity) -> EmissionSpectrum:
    """Normalize to unit peak and extract peak energy and FWHM."""
    energies = np.asarray(energies, dtype=float)
    intensity = np.asarray(intensity, dtype=float)
    if intensity.max() <= 0:
        raise AnalysisError("spectrum has no positive samples")
    intensity = intensity / intensity.max()
    left, right, k = half_max_crossings(energies, intensity)
    return EmissionSpectrum(energies, intensity, _peak_energy(energies, intensity, k), right - left)


def filtered_spectrum(emitter, V, mode, energies) -> EmissionSpectrum:
    """Mesa line multiplied pointwise by the cavity Lorentzian, unit peak.

    Parameters
    ----------
    emitter : StarkEmitter
    V : float
        Bias [V].
    mode : CavityMode
    energies : array_like
        Strictly increasing grid [meV], >= 2000 points spanning at least
        +/-10 combined linewidths around the cavity resonance.
    """
    energies = np.asarray(energies, dtype=float)
    width = emitter.linewidth + mode.linewidth
    if energies.size < MIN_GRID_POINTS:
        raise ConfigError(f"energy grid needs >= {MIN_GRID_POINTS} points, got {energies.size}")
    if np.isfinite(width):
        lo, hi = mode.E_cav - MIN_GRID_SPAN * width, mode.E_cav + MIN_GRID_SPAN * width
        if energies[0] > lo or energies[-1] < hi:
            raise ConfigError("energy grid must span +/-10 combined linewidths around E_cav")
    intensity = emitter.mesa_spectrum(V, energies) * lorentzian(energies - mode.E_cav, mode.linewidth)
    return analyse(energies, intensity)


def mesa_emission(emitter, V, energies) -> EmissionSpectrum:
    return analyse(energies, emitter.mesa_spectrum(V, energies))


def spectrum_quality_factor(spectrum) -> float:
    """Peak energy over FWHM, recomputed from the samples.

    Raises
    ------
    AnalysisError
        If the spectrum has more than one lobe above half maximum.
    """
    return analyse(spectrum.energy, spectrum.intensity).quality_factor


def narrowing_factor(reference: EmissionSpectrum, filtered: EmissionSpectrum) -> float:
    return reference.fwhm / filtered.fwhm
