"""Diffusion-wave asymptotic profiles.

The slow density field is the heat semigroup (diffusivity sigma) acting
on the initial density perturbation; the velocity follows from the Darcy
balance u = -(sigma/rho_bar) grad rho and the potential from the chemical
balance a rho = b phi.  Profiles are built spectrally on the periodic
box, which matches the whole-space construction to spectral accuracy
while the diffusion front stays away from the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import stability_check


@dataclass(frozen=True)
class HeatKernelParams:
    """Diffusivity and dimension of the scalar heat kernel."""

    sigma: float
    dim: int = 3

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("heat kernel diffusivity must be positive")
        if self.dim not in (1, 2, 3):
            raise ValueError("heat kernel dim must be 1, 2, or 3")


def heat_kernel(hk, t, x):
    """Evaluate (4 pi sigma t)^(-d/2) exp(-|x|^2 / (4 sigma t)).

    x is a position vector (last axis of length dim) or, in one
    dimension, a bare coordinate array.
    """
    if t <= 0:
        raise ValueError("heat kernel needs t > 0")
    x = np.asarray(x, dtype=float)
    if x.ndim and x.shape[-1] == hk.dim:
        r2 = np.sum(x * x, axis=-1)
    elif hk.dim == 1:
        r2 = x * x
    else:
        raise ValueError("position must have a final axis of length dim")
    s = 4.0 * hk.sigma * t
    return (np.pi * s) ** (-0.5 * hk.dim) * np.exp(-r2 / s)


@dataclass
class WaveProfile:
    """Profile triple (rho~, u~, phi~) on a grid at one time."""

    rho_tilde: np.ndarray
    u_tilde: np.ndarray
    phi_tilde: np.ndarray
    t: float


def diffusion_wave(params, eq, grid, rho0_pert, t):
    """Profile at time t >= 0 from the initial density perturbation.

    Spectrally: modes pick up exp(-sigma |k|^2 t), the velocity is the
    damped gradient scaled by -sigma/rho_bar, and phi~ = (a/b) rho~.
    At t=0 the density perturbation is returned untouched.
    """
    if t < 0:
        raise ValueError("profile time must be nonnegative")
    sigma = stability_check(params, eq).sigma
    spec = grid.fft(rho0_pert)
    if t > 0:
        spec = spec * np.exp(-sigma * grid.k2 * t)
        rho_tilde = grid.ifft(spec).real
    else:
        rho_tilde = np.array(rho0_pert, dtype=float)
    u_tilde = (-sigma / eq.rho_bar) * np.stack(
        [grid.ifft(1j * kc * spec).real for kc in grid.k_components()])
    phi_tilde = (params.a / params.b) * rho_tilde
    return WaveProfile(rho_tilde=rho_tilde, u_tilde=u_tilde,
                       phi_tilde=phi_tilde, t=float(t))
