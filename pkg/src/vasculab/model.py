"""Background model: pressure laws, equilibria, and the derived coefficients.

The continuum system couples a compressible fluid for the cell phase
(density rho, velocity u, pressure P(rho), friction alpha, chemotactic
drive mu rho grad(phi)) to a linear reaction-diffusion equation for the
chemoattractant phi (diffusivity D, production a rho, decay b phi).
Everything downstream keys off the constant state (rho_bar, 0, phi_bar)
with phi_bar = a rho_bar / b, and off two derived numbers:

    margin = b P'(rho_bar) - a mu rho_bar
    sigma  = margin / (b alpha)

margin > 0 is the stability condition; sigma is the effective
diffusivity of the slow dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import QuadratureError

PRESSURE_KINDS = ("quadratic", "power")


@dataclass(frozen=True)
class PressureLaw:
    """Barotropic pressure, either quadratic K/2 rho^2 or power K rho^gamma.

    gamma is ignored for the quadratic kind (kept at 2.0 for symmetry).
    """

    kind: str
    K: float
    gamma: float = 2.0

    def __post_init__(self):
        if self.kind not in PRESSURE_KINDS:
            raise ValueError(f"unknown pressure kind {self.kind!r}")
        if not self.K > 0:
            raise ValueError("pressure coefficient K must be positive")
        if self.kind == "power" and not self.gamma >= 1:
            raise ValueError("pressure exponent gamma must be >= 1")

    @classmethod
    def quadratic(cls, K):
        return cls("quadratic", float(K))

    @classmethod
    def power(cls, K, gamma):
        return cls("power", float(K), float(gamma))

    def __call__(self, rho, order=0):
        return pressure_eval(self, rho, order)


def pressure_eval(law, rho, order=0):
    """Evaluate P, P' or P'' at a positive density (scalar or array).

    order 0 -> P(rho), 1 -> P'(rho), 2 -> P''(rho).
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("density must be positive")
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    K = law.K
    if law.kind == "quadratic":
        if order == 0:
            out = 0.5 * K * rho**2
        elif order == 1:
            out = K * rho
        else:
            out = K * np.ones_like(rho)
    else:
        g = law.gamma
        if order == 0:
            out = K * rho**g
        elif order == 1:
            out = K * g * rho ** (g - 1)
        else:
            out = K * g * (g - 1) * rho ** (g - 2)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ModelParams:
    """Positive model constants and the pressure law."""

    mu: float
    alpha: float
    D: float
    a: float
    b: float
    pressure: PressureLaw

    def __post_init__(self):
        for name in ("mu", "alpha", "D", "a", "b"):
            if not getattr(self, name) > 0:
                raise ValueError(f"model constant {name} must be positive")


@dataclass(frozen=True)
class Equilibrium:
    """Constant state (rho_bar, u=0, phi_bar) with phi_bar = a rho_bar / b."""

    rho_bar: float
    phi_bar: float

    def __post_init__(self):
        if not self.rho_bar > 0:
            raise ValueError("equilibrium density must be positive")

    @classmethod
    def of(cls, params, rho_bar):
        rho_bar = float(rho_bar)
        return cls(rho_bar, params.a * rho_bar / params.b)


def canonical_model():
    """Reference parameter set: all constants 1, quadratic K=2, rho_bar=1.

    Gives margin = 1, sigma = 1, P'(rho_bar) = 2; used all over the tests.
    """
    params = ModelParams(mu=1.0, alpha=1.0, D=1.0, a=1.0, b=1.0,
                         pressure=PressureLaw.quadratic(2.0))
    return params, Equilibrium.of(params, 1.0)


@dataclass(frozen=True)
class DerivedCoeffs:
    """Stability margin and effective diffusivity at a given equilibrium."""

    margin: float
    sigma: float

    @property
    def stable(self):
        return self.margin > 0


def stability_check(params, eq):
    """Return margin = b P'(rho_bar) - a mu rho_bar and sigma = margin/(b alpha).

    Raises if the stored phi_bar is inconsistent with a rho_bar / b.
    """
    expected_phi = params.a * eq.rho_bar / params.b
    if abs(eq.phi_bar - expected_phi) > 1e-12 * max(1.0, abs(expected_phi)):
        raise ValueError("equilibrium phi_bar inconsistent with a rho_bar / b")
    dp = pressure_eval(params.pressure, eq.rho_bar, order=1)
    margin = params.b * dp - params.a * params.mu * eq.rho_bar
    sigma = margin / (params.b * params.alpha)
    return DerivedCoeffs(margin=margin, sigma=sigma)


def flux_q(params, eq, rho):
    """Porous-medium flux q(rho) = (P(rho) - (a mu / 2b) rho^2) / alpha.

    Satisfies q'(rho_bar) = sigma; the slow dynamics is rho_t = Delta q(rho).
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("density must be positive")
    P = pressure_eval(params.pressure, rho, order=0)
    out = (P - 0.5 * params.a * params.mu / params.b * rho**2) / params.alpha
    return out if np.ndim(out) else float(out)


def potential_G(params, eq, rho):
    """Internal-energy density G with G'' = P'(rho)/rho, G(rho_bar) = G'(rho_bar) = 0.

    Quadratic law: G'' = K identically, so G = K/2 (rho - rho_bar)^2 in
    closed form.  Other laws integrate the Taylor remainder
    G(rho) = int_{rho_bar}^{rho} (rho - s) P'(s)/s ds adaptively.
    """
    scalar = np.ndim(rho) == 0
    rho_arr = np.atleast_1d(np.asarray(rho, dtype=float))
    if np.any(rho_arr <= 0):
        raise ValueError("density must be positive")
    if params.pressure.kind == "quadratic":
        out = 0.5 * params.pressure.K * (rho_arr - eq.rho_bar) ** 2
        return float(out[0]) if scalar else out
    out = np.empty_like(rho_arr)
    for i, r in enumerate(rho_arr.ravel()):
        val, err = integrate.quad(
            lambda s, r=r: (r - s) * pressure_eval(params.pressure, s, 1) / s,
            eq.rho_bar, r)
        if err > max(1e-10, 1e-8 * abs(val)):
            raise QuadratureError(
                f"potential quadrature error {err:.3e} at rho={r:.6g}")
        out.ravel()[i] = val
    return float(out[0]) if scalar else out
