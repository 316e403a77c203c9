"""Far field of a uniformly phased rectangular patch array.

All patches are assumed phase locked with equal amplitude. The radiated
intensity in direction cosines ``(u, v)`` is ``|AF(u, v)|**2 * |e(u, v)|**2``
with ``AF`` the array factor and ``e`` the single-element pattern.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _parallel
from .analysis import fwhm
from .errors import AnalysisError, DomainError

ELEMENT_PATTERNS = ("isotropic", "cosine")


@dataclass(frozen=True)
class ArrayGeometry:
    """Rectangular array of ``Nx x Ny`` emitters with pitch ``p`` [um].

    ``coherence_scale`` stretches the effective pitch (and hence the
    phase-locked aperture); 1.0 is the physical array.
    """

    Nx: int
    Ny: int
    p: float
    wavelength: float
    element: str = "cosine"
    coherence_scale: float = 1.0

    def __post_init__(self):
        if int(self.Nx) != self.Nx or int(self.Ny) != self.Ny or self.Nx < 1 or self.Ny < 1:
            raise DomainError("Nx and Ny must be integers >= 1")
        if not (self.p > 0 and self.wavelength > 0 and self.coherence_scale > 0):
            raise DomainError("pitch, wavelength and coherence scale must be positive")
        if self.element not in ELEMENT_PATTERNS:
            raise DomainError(f"element pattern must be one of {ELEMENT_PATTERNS}, got {self.element!r}")

    @property
    def pitch(self) -> float:
        """Effective pitch including the coherence scale [um]."""
        return self.p * self.coherence_scale

    @property
    def aperture(self) -> tuple[float, float]:
        return self.Nx * self.pitch, self.Ny * self.pitch

    @property
    def fraunhofer_distance_mm(self) -> float:
        D = max(self.aperture)
        return D * D / self.wavelength * 1e-3


def _axis_factor(n, kp, c, shift=0.0):
    # sum of exp(i k p m c) over centred indices m
    total = np.zeros(np.shape(c), dtype=complex)
    for m in np.arange(n) - (n - 1) / 2.0 + shift:
        total += np.exp(1j * (kp * m) * c)
    return total


def array_factor(geometry: ArrayGeometry, u, v, shift=(0.0, 0.0)):
    """Complex array factor at direction cosines ``(u, v)``.

    ``shift`` translates the whole array by a number of pitches; it only
    changes the phase.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(u * u + v * v > 1.0 + 1e-12):
        raise DomainError("direction cosines outside the visible region")
    kp = 2.0 * math.pi / geometry.wavelength * geometry.pitch
    out = _axis_factor(geometry.Nx, kp, u, shift[0]) * _axis_factor(geometry.Ny, kp, v, shift[1])
    return complex(out) if out.ndim == 0 else out


def element_intensity(geometry: ArrayGeometry, u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if geometry.element == "isotropic":
        return np.ones(np.broadcast(u, v).shape)
    return np.clip(1.0 - u * u - v * v, 0.0, None)  # cos^2(theta)


def radiation_intensity(geometry: ArrayGeometry, u, v):
    """Unnormalized radiated intensity ``|AF|^2 |e|^2``."""
    af = array_factor(geometry, u, v)
    return np.abs(af) ** 2 * element_intensity(geometry, u, v)


def divergence(width_mm, z_mm):
    """Full divergence angle [deg] of a beam of width ``width_mm`` at distance ``z_mm``."""
    width_mm = np.asarray(width_mm, dtype=float)
    if np.any(width_mm <= 0) or not z_mm > 0:
        raise DomainError("width and distance must be positive")
    out = np.degrees(2.0 * np.arctan(0.5 * width_mm / z_mm))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class FarFieldMap:
    z: float
    x: np.ndarray
    y: np.ndarray
    intensity: np.ndarray  # indexed [iy, ix]
    dx: float
    dy: float
    theta_x: float
    theta_y: float
    metadata: dict = field(default_factory=dict)


def intensity_map(geometry: ArrayGeometry, z_mm: float, half_extent_mm: float, step_mm: float) -> FarFieldMap:
    """Intensity on a detector plane at distance ``z_mm``, normalized to unit maximum.

    The plane grid is ``k * step_mm`` for integer ``|k| <= half_extent/step``,
    so it is exactly symmetric about the beam axis. Direction cosines are the
    exact (non-paraxial) ``(x, y) / r``.

    Raises
    ------
    AnalysisError
        If the maximum lies on the grid boundary or a half-maximum crossing
        is missing from the central cuts.
    """
    if not (z_mm > 0 and half_extent_mm > 0 and step_mm > 0):
        raise DomainError("z, extent and step must be positive")
    if z_mm < 10.0 * geometry.fraunhofer_distance_mm:
        warnings.warn(f"z={z_mm} mm is not far beyond D^2/lambda={geometry.fraunhofer_distance_mm:.3g} mm", stacklevel=2)
    n = int(round(half_extent_mm / step_mm))
    if n < 2:
        raise DomainError("grid needs at least two steps per side")
    coords = np.arange(-n, n + 1) * step_mm
    X, Y = np.meshgrid(coords, coords)
    R = np.sqrt(X * X + Y * Y + z_mm * z_mm)
    U, V = X / R, Y / R

    rows = np.array_split(np.arange(coords.size), min(_parallel.thread_count(), coords.size))
    parts = _parallel.ordered_map(lambda idx: radiation_intensity(geometry, U[idx], V[idx]), rows)
    intensity = np.concatenate(parts, axis=0)
    intensity = intensity / intensity.max()

    iy, ix = np.unravel_index(np.argmax(intensity), intensity.shape)
    if iy in (0, coords.size - 1) or ix in (0, coords.size - 1):
        raise AnalysisError("intensity maximum on grid boundary: main lobe not captured")
    dx = fwhm(coords, intensity[iy, :])
    dy = fwhm(coords, intensity[:, ix])
    meta = {
        "element": geometry.element,
        "coherence_scale": geometry.coherence_scale,
        "coherence_scale_default": geometry.coherence_scale == 1.0,
        "fraunhofer_distance_mm": geometry.fraunhofer_distance_mm,
    }
    return FarFieldMap(
        z=z_mm, x=coords, y=coords, intensity=intensity,
        dx=dx, dy=dy, theta_x=divergence(dx, z_mm), theta_y=divergence(dy, z_mm), metadata=meta,
    )


def angular_fwhm(geometry: ArrayGeometry, axis: str = "x", n: int = 20001) -> float:
    """Main-lobe FWHM [rad] of the polar cut in the x-z (or y-z) plane."""
    N = geometry.Nx if axis == "x" else geometry.Ny
    guess = geometry.wavelength / (N * geometry.pitch)
    theta = np.linspace(-min(4.0 * guess, 0.5 * math.pi), min(4.0 * guess, 0.5 * math.pi), n)
    s = np.sin(theta)
    u, v = (s, np.zeros_like(s)) if axis == "x" else (np.zeros_like(s), s)
    return fwhm(theta, radiation_intensity(geometry, u, v))


def max_sidelobe_db(geometry: ArrayGeometry, n: int = 2001) -> float:
    """Highest lobe outside the main lobe over the visible disc, in dB below the peak.

    The main lobe is the cross ``|u| < lambda/(Nx p)`` and ``|v| < lambda/(Ny p)``.
    """
    c = np.linspace(-1.0, 1.0, n)
    afx = np.abs(_axis_factor(geometry.Nx, 2 * math.pi / geometry.wavelength * geometry.pitch, c)) ** 2
    afy = np.abs(_axis_factor(geometry.Ny, 2 * math.pi / geometry.wavelength * geometry.pitch, c)) ** 2
    U, V = np.meshgrid(c, c)
    I = afy[:, None] * afx[None, :] * element_intensity(geometry, U, V)
    visible = U * U + V * V <= 1.0
    main = (np.abs(U) < geometry.wavelength / (geometry.Nx * geometry.pitch)) & (
        np.abs(V) < geometry.wavelength / (geometry.Ny * geometry.pitch)
    )
    peak = I[visible].max()
    outside = I[visible & ~main]
    if outside.size == 0:
        return -math.inf
    return float(10.0 * np.log10(outside.max() / peak))


def _gauss(n, a, b):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def _hemisphere_power(geometry: ArrayGeometry, n: int) -> float:
    # theta split at a few main-lobe widths so the lobe gets its own nodes
    lobe = min(4.0 * geometry.wavelength / (min(geometry.Nx, geometry.Ny) * geometry.pitch), 0.25 * math.pi)
    t1, wt1 = _gauss(n, 0.0, lobe)
    t2, wt2 = _gauss(n, lobe, 0.5 * math.pi)
    theta = np.concatenate((t1, t2))
    wt = np.concatenate((wt1, wt2)) * np.sin(theta)
    phi, wp = _gauss(n, 0.0, 0.5 * math.pi)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    U, V = np.sin(T) * np.cos(P), np.sin(T) * np.sin(P)
    # u -> -u and v -> -v symmetry of a centred array: one quadrant, times four
    blocks = np.array_split(np.arange(theta.size), min(_parallel.thread_count(), theta.size))
    parts = _parallel.ordered_map(lambda idx: radiation_intensity(geometry, U[idx], V[idx]), blocks)
    I = np.concatenate(parts, axis=0)
    return 4.0 * float(wt @ I @ wp)


def directivity(geometry: ArrayGeometry, rtol: float = 1e-3, n_start: int = 32, n_max: int = 1024) -> float:
    """Peak directivity ``4 pi I_max / P_rad`` by refined Gauss-Legendre quadrature.

    Cosine elements radiate into the upper hemisphere only (ground-plane
    backed patches); isotropic elements radiate into the full sphere, whose
    lower half mirrors the upper one.
    """
    peak = float(radiation_intensity(geometry, 0.0, 0.0))
    factor = 2.0 if geometry.element == "isotropic" else 1.0
    n = n_start
    prev = factor * _hemisphere_power(geometry, n)
    while n < n_max:
        n *= 2
        cur = factor * _hemisphere_power(geometry, n)
        if abs(cur - prev) <= rtol * abs(cur):
            return 4.0 * math.pi * peak / cur
        prev = cur
    raise AnalysisError(f"directivity quadrature did not reach rtol={rtol} with {n_max} nodes")
