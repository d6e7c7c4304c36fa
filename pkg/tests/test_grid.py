"""Spectral grid helpers: wavenumbers, dealiasing, calculus, quadrature."""

import numpy as np
import pytest

from vasculab.grid import Grid, set_fft_workers


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(dim=4, n=32, length=1.0)
    with pytest.raises(ValueError):
        Grid(dim=2, n=8, length=1.0)
    with pytest.raises(ValueError):
        Grid(dim=2, n=48, length=1.0)
    with pytest.raises(ValueError):
        Grid(dim=1, n=32, length=0.0)
    Grid(dim=3, n=16, length=2.5)


def test_spacing_and_coordinates():
    g = Grid(dim=1, n=16, length=2.0)
    assert g.h == 0.125
    assert g.x1d[0] == 0.0
    assert g.x1d[-1] == pytest.approx(2.0 - 0.125)
    assert g.shape == (16,)
    xs = Grid(dim=2, n=16, length=1.0).coords()
    assert xs[0].shape == (16, 1) and xs[1].shape == (1, 16)


def test_wavenumber_layout():
    g = Grid(dim=1, n=32, length=5.0)
    assert g.k1d[0] == 0.0
    assert g.k1d[1] == pytest.approx(2.0 * np.pi / 5.0)
    assert g.k1d[16] == pytest.approx(-2.0 * np.pi / 5.0 * 16)
    assert g.modes1d[1] == 1 and g.modes1d[-1] == -1
    k2 = Grid(dim=2, n=16, length=2.0 * np.pi).k2
    assert k2[0, 0] == 0.0
    assert k2[1, 2] == pytest.approx(1.0 + 4.0)


def test_dealias_mask_counts_and_symmetry():
    for n in (16, 32, 64):
        g = Grid(dim=1, n=n, length=1.0)
        assert g.dealias_mask.sum() == 2 * (n // 3) + 1
    g3 = Grid(dim=3, n=16, length=1.0)
    assert g3.dealias_mask.sum() == (2 * (16 // 3) + 1) ** 3
    g2 = Grid(dim=2, n=32, length=1.0)
    mask = g2.dealias_mask
    flipped = mask[::-1, :][:, ::-1]
    flipped = np.roll(np.roll(flipped, 1, axis=0), 1, axis=1)
    assert np.array_equal(mask, flipped)  # even in m -> -m


def test_fft_roundtrip_and_parseval():
    rng = np.random.default_rng(2)
    g = Grid(dim=2, n=32, length=3.0)
    f = rng.normal(size=g.shape)
    back = g.ifft(g.fft(f))
    assert np.max(np.abs(back.real - f)) < 1e-13
    assert np.max(np.abs(back.imag)) < 1e-13
    spec = g.fft(f)
    via_spec = g.length**g.dim * np.sum(np.abs(spec) ** 2) / g.n**(2 * g.dim)
    assert g.l2(f) ** 2 == pytest.approx(via_spec, rel=1e-12)


def test_gradient_laplacian_on_trig_fields():
    g = Grid(dim=2, n=32, length=2.0 * np.pi)
    x, y = np.meshgrid(g.x1d, g.x1d, indexing="ij")
    f = np.sin(x) * np.cos(2.0 * y)
    gx, gy = g.gradient(f)
    assert np.max(np.abs(gx - np.cos(x) * np.cos(2.0 * y))) < 1e-12
    assert np.max(np.abs(gy + 2.0 * np.sin(x) * np.sin(2.0 * y))) < 1e-12
    lap = g.laplacian(f)
    assert np.max(np.abs(lap + 5.0 * f)) < 1e-11


def test_divergence_of_gradient_is_laplacian():
    rng = np.random.default_rng(5)
    g = Grid(dim=3, n=16, length=4.0)
    spec = np.zeros(g.shape, dtype=complex)
    # smooth random band-limited field
    spec[:4, :4, :4] = rng.normal(size=(4, 4, 4)) + 1j * rng.normal(size=(4, 4, 4))
    f = g.ifft(spec).real
    assert np.max(np.abs(g.divergence(g.gradient(f)) - g.laplacian(f))) < 1e-11


def test_integrate_and_norms():
    g = Grid(dim=1, n=64, length=2.0 * np.pi)
    assert g.integrate(np.ones(g.shape)) == pytest.approx((2.0 * np.pi))
    f = np.sin(3.0 * g.x1d)
    assert g.integrate(f**2) == pytest.approx(np.pi, rel=1e-12)
    assert g.l2(f) == pytest.approx(np.sqrt(np.pi), rel=1e-12)
    assert g.linf(2.5 * f) == pytest.approx(2.5, rel=1e-6)
    vec = np.stack([f, np.cos(3.0 * g.x1d)])
    assert g.l2(vec) == pytest.approx(np.sqrt(2.0 * np.pi), rel=1e-12)


def test_fft_workers_setting():
    assert set_fft_workers(2) == 2
    g = Grid(dim=1, n=32, length=1.0)
    f = np.sin(g.x1d)
    spec = g.fft(f)
    assert set_fft_workers(0) == 1  # clamped
    assert np.allclose(g.fft(f), spec)
