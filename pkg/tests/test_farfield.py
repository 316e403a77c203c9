import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patchlum.errors import AnalysisError, DomainError
from patchlum.farfield import (
    ArrayGeometry, angular_fwhm, array_factor, directivity, divergence, intensity_map, max_sidelobe_db,
    radiation_intensity,
)


def brute_af(Nx, Ny, p, lam, u, v, shift=(0.0, 0.0)):
    """Direct double sum over element positions."""
    k = 2 * math.pi / lam
    xs = (np.arange(Nx) - (Nx - 1) / 2 + shift[0]) * p
    ys = (np.arange(Ny) - (Ny - 1) / 2 + shift[1]) * p
    X, Y = np.meshgrid(xs, ys)
    u = np.asarray(u, dtype=float)[..., None]
    v = np.asarray(v, dtype=float)[..., None]
    return np.exp(1j * k * (X.ravel() * u + Y.ravel() * v)).sum(axis=-1)


def test_array_factor_against_direct_sum():
    g = ArrayGeometry(7, 4, 7.0, 10.0)
    rng = np.random.default_rng(0)
    u, v = rng.uniform(-0.7, 0.7, 50), rng.uniform(-0.7, 0.7, 50)
    np.testing.assert_allclose(array_factor(g, u, v), brute_af(7, 4, 7.0, 10.0, u, v), atol=1e-10)


def test_single_element_and_broadside():
    one = ArrayGeometry(1, 1, 7.0, 10.0, element="isotropic")
    u = np.linspace(-0.7, 0.7, 15)
    np.testing.assert_allclose(np.abs(array_factor(one, u, 0.5 * u)), 1.0)
    g = ArrayGeometry(20, 20, 7.0, 10.0)
    assert abs(array_factor(g, 0.0, 0.0)) == pytest.approx(400.0)


def test_first_null():
    Nx, p, lam = 10, 7.0, 10.0
    u = np.linspace(1e-6, 0.2, 200001)
    mag = np.abs(brute_af(Nx, 1, p, lam, u, 0.0 * u))
    # first local minimum of the direct sum
    k = int(np.argmax((mag[1:-1] < mag[:-2]) & (mag[1:-1] <= mag[2:]))) + 1
    assert u[k] == pytest.approx(lam / (Nx * p), abs=u[1] - u[0])
    assert abs(array_factor(ArrayGeometry(Nx, 1, p, lam), lam / (Nx * p), 0.0)) < 1e-9


def test_visible_region_enforced():
    with pytest.raises(DomainError):
        array_factor(ArrayGeometry(2, 2, 7.0, 10.0), 0.9, 0.9)


@pytest.mark.parametrize(
    "kwargs", [dict(Nx=0), dict(Ny=1.5), dict(p=0.0), dict(wavelength=-1.0), dict(element="dipole"),
               dict(coherence_scale=0.0)],
)
def test_geometry_validation(kwargs):
    base = dict(Nx=2, Ny=2, p=7.0, wavelength=10.0)
    with pytest.raises(DomainError):
        ArrayGeometry(**{**base, **kwargs})


def test_divergence_examples():
    assert divergence(0.59, 50.0) == pytest.approx(0.6760823535182821, rel=1e-12)
    assert divergence(0.68, 50.0) == pytest.approx(0.7792105912934297, rel=1e-12)
    assert divergence(100.0, 50.0) == pytest.approx(90.0)
    with pytest.raises(DomainError):
        divergence(0.0, 50.0)


def test_map_20x20_at_50mm():
    g = ArrayGeometry(20, 20, 7.0, 10.0)
    fmap = intensity_map(g, 50.0, 8.0, 0.02)
    iy, ix = np.unravel_index(np.argmax(fmap.intensity), fmap.intensity.shape)
    assert fmap.x[ix] == 0.0 and fmap.y[iy] == 0.0
    assert fmap.dx == pytest.approx(3.2, abs=0.05)
    assert fmap.theta_x == pytest.approx(math.degrees(0.886 * 10.0 / 140.0), rel=0.01)
    assert fmap.theta_x == pytest.approx(divergence(fmap.dx, 50.0))
    # mirror symmetry, bit for bit
    np.testing.assert_array_equal(fmap.intensity, fmap.intensity[:, ::-1])
    np.testing.assert_array_equal(fmap.intensity, fmap.intensity[::-1, :])


def test_map_needs_main_lobe():
    g = ArrayGeometry(20, 20, 7.0, 10.0)
    with pytest.raises(AnalysisError):
        intensity_map(g, 50.0, 0.5, 0.05)


def test_map_warns_inside_fraunhofer_region():
    g = ArrayGeometry(20, 20, 7.0, 10.0)
    with pytest.warns(UserWarning, match="D\\^2/lambda"):
        intensity_map(g, 1.0, 0.2, 0.004)


def test_map_thread_count_does_not_change_result(monkeypatch):
    g = ArrayGeometry(10, 10, 7.0, 10.0)
    monkeypatch.setenv("PATCHLUM_THREADS", "1")
    a = intensity_map(g, 50.0, 12.0, 0.1).intensity
    monkeypatch.setenv("PATCHLUM_THREADS", "4")
    b = intensity_map(g, 50.0, 12.0, 0.1).intensity
    np.testing.assert_array_equal(a, b)


def test_no_grating_lobes():
    g = ArrayGeometry(20, 20, 7.0, 10.0)
    level = max_sidelobe_db(g)
    assert level < -10.0
    assert level == pytest.approx(-13.26, abs=0.1)  # uniform-aperture first sidelobe


def test_aperture_scaling_of_fwhm():
    a = angular_fwhm(ArrayGeometry(5, 5, 7.0, 10.0, element="isotropic"))
    b = angular_fwhm(ArrayGeometry(20, 20, 7.0, 10.0, element="isotropic"))
    assert a / b == pytest.approx(4.0, rel=0.05)


def test_divergence_z_independent():
    g = ArrayGeometry(20, 20, 7.0, 10.0)
    thetas = [intensity_map(g, z, 0.16 * z, 0.0004 * z).theta_x for z in (30.0, 50.0, 100.0)]
    assert max(thetas) / min(thetas) - 1 < 0.02


@settings(deadline=None, max_examples=20)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_translation_leaves_power_unchanged(sx, sy):
    g = ArrayGeometry(4, 3, 7.0, 10.0, element="isotropic")
    t = np.linspace(0, 0.5 * math.pi, 60)
    ph = np.linspace(0, 2 * math.pi, 121)
    T, P = np.meshgrid(t, ph)
    u, v = np.sin(T) * np.cos(P), np.sin(T) * np.sin(P)
    w = np.sin(T)
    a = np.sum(np.abs(array_factor(g, u, v)) ** 2 * w)
    b = np.sum(np.abs(array_factor(g, u, v, shift=(sx, sy))) ** 2 * w)
    assert b == pytest.approx(a, rel=1e-10)


def test_directivity_single_isotropic():
    assert directivity(ArrayGeometry(1, 1, 7.0, 10.0, element="isotropic")) == pytest.approx(1.0, rel=1e-3)


def test_directivity_single_cosine_element():
    # cos^2 into a hemisphere: 4 pi / (2 pi / 3)
    assert directivity(ArrayGeometry(1, 1, 7.0, 10.0)) == pytest.approx(6.0, rel=1e-3)


def test_directivity_scaling():
    d10 = directivity(ArrayGeometry(10, 10, 7.0, 10.0))
    d20x10 = directivity(ArrayGeometry(20, 10, 7.0, 10.0))
    d20 = directivity(ArrayGeometry(20, 20, 7.0, 10.0))
    assert d20x10 / d10 == pytest.approx(2.0, rel=0.05)
    assert d20 / d10 == pytest.approx(4.0, rel=0.05)


def test_directivity_against_midpoint_sum():
    g = ArrayGeometry(6, 6, 7.0, 10.0)
    n = 1500
    t = (np.arange(n) + 0.5) * (0.5 * math.pi / n)
    ph = (np.arange(4 * n) + 0.5) * (2 * math.pi / (4 * n))
    T, P = np.meshgrid(t, ph, indexing="ij")
    I = radiation_intensity(g, np.sin(T) * np.cos(P), np.sin(T) * np.sin(P))
    power = np.sum(I * np.sin(T)[:, :1]) * (0.5 * math.pi / n) * (2 * math.pi / (4 * n))
    ref = 4 * math.pi * float(radiation_intensity(g, 0.0, 0.0)) / power
    assert directivity(g) == pytest.approx(ref, rel=1e-3)


def test_coherence_scale_narrows_beam():
    a = angular_fwhm(ArrayGeometry(10, 10, 7.0, 10.0))
    b = angular_fwhm(ArrayGeometry(10, 10, 7.0, 10.0, coherence_scale=5.0))
    assert a / b == pytest.approx(5.0, rel=0.05)
