"""Uniform periodic grids with spectral calculus helpers.

Fields live on the box [0, L)^dim sampled at n points per axis; all
transforms are full complex FFTs.  Wavenumbers are 2 pi m / L with the
integer m laid out as in fftfreq, and the 2/3-rule mask keeps modes with
|m| <= n // 3 on every axis.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

_workers = 1


def set_fft_workers(count):
    """Thread count handed to the FFT backend; returns the value in use."""
    global _workers
    _workers = max(1, int(count))
    return _workers


def multi_indices(dim, order):
    """Derivative multi-indices l with |l| <= order, in graded order."""
    out = []
    for total in range(order + 1):
        for combo in itertools.product(range(total + 1), repeat=dim):
            if sum(combo) == total:
                out.append(combo)
    return out


@dataclass(frozen=True)
class Grid:
    """Periodic box [0, L)^dim, n points per axis (power of two, >= 16)."""

    dim: int
    n: int
    length: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError("grid dim must be 1, 2, or 3")
        if self.n < 16 or self.n & (self.n - 1):
            raise ValueError("grid n must be a power of two, at least 16")
        if not self.length > 0:
            raise ValueError("grid length must be positive")

    @property
    def h(self):
        return self.length / self.n

    @property
    def shape(self):
        return (self.n,) * self.dim

    @cached_property
    def x1d(self):
        return self.h * np.arange(self.n)

    def coords(self):
        """Sparse meshgrid of the physical coordinates."""
        return np.meshgrid(*([self.x1d] * self.dim), indexing="ij",
                           sparse=True)

    @cached_property
    def modes1d(self):
        return np.rint(np.fft.fftfreq(self.n, 1.0 / self.n)).astype(int)

    @cached_property
    def k1d(self):
        return 2.0 * np.pi / self.length * self.modes1d

    def k_components(self):
        """Per-axis wavenumber arrays shaped to broadcast over spectra."""
        comps = []
        for ax in range(self.dim):
            shape = [1] * self.dim
            shape[ax] = self.n
            comps.append(self.k1d.reshape(shape))
        return tuple(comps)

    @cached_property
    def k2(self):
        out = np.zeros(self.shape)
        for kc in self.k_components():
            out = out + kc**2
        return out

    @cached_property
    def dealias_mask(self):
        keep = np.abs(self.modes1d) <= self.n // 3
        mask = np.ones(self.shape, dtype=bool)
        for ax in range(self.dim):
            shape = [1] * self.dim
            shape[ax] = self.n
            mask = mask & keep.reshape(shape)
        return mask

    # ------------------------------------------------------------ calculus

    def fft(self, f):
        return scipy.fft.fftn(f, workers=_workers)

    def ifft(self, spec):
        return scipy.fft.ifftn(spec, workers=_workers)

    def gradient(self, f):
        """Spectral gradient, shape (dim,) + grid shape."""
        spec = self.fft(f)
        return np.stack([self.ifft(1j * kc * spec).real
                         for kc in self.k_components()])

    def divergence(self, vec):
        out = np.zeros(self.shape)
        for comp, kc in zip(vec, self.k_components()):
            out = out + self.ifft(1j * kc * self.fft(comp)).real
        return out

    def laplacian(self, f):
        return self.ifft(-self.k2 * self.fft(f)).real

    def deriv_factor(self, l):
        """Spectral monomial (i k)^l for the derivative multi-index l."""
        fac = np.ones(self.shape, dtype=complex)
        for kc, p in zip(self.k_components(), l):
            if p:
                fac = fac * (1j * kc) ** p
        return fac

    def sobolev_multiplier(self, order):
        """Sum of k^(2l) over multi-indices |l| <= order."""
        out = np.zeros(self.shape)
        for l in multi_indices(self.dim, order):
            term = np.ones(self.shape)
            for kc, p in zip(self.k_components(), l):
                if p:
                    term = term * kc ** (2 * p)
            out += term
        return out

    def integrate(self, f):
        return float(np.sum(f)) * self.h**self.dim

    def l2(self, f):
        """L2 norm; vector fields contribute all components."""
        return math.sqrt(self.integrate(np.abs(np.asarray(f)) ** 2))

    def linf(self, f):
        return float(np.max(np.abs(f)))
